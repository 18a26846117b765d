# Copyright 2026 The ILA Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Implicit learnable alignment for video transformers."""

from ._ila import (
    Dataset,
    Error,
    Model,
    RunConfig,
    alignment_loss,
    check_model,
    check_ops,
    default_config_text,
    emd,
    file_sha1,
    flops_table,
    grid_position,
    make_mask,
    mask_weight,
    partner,
    reverse_frames,
    similarity_loss,
    solve_assignment,
    topk_accuracy,
)

__all__ = [
    "Dataset",
    "Error",
    "Model",
    "RunConfig",
    "alignment_loss",
    "check_model",
    "check_ops",
    "default_config_text",
    "emd",
    "file_sha1",
    "flops_table",
    "grid_position",
    "make_mask",
    "mask_weight",
    "partner",
    "reverse_frames",
    "similarity_loss",
    "solve_assignment",
    "topk_accuracy",
]
