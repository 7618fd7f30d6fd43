#
# Copyright 2026 The fwattest Authors
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
#

"""Python bindings for the fwattest firmware attestation emulator."""

import json

from ._fwattest import (
    Emulator,
    FwattestError,
    build_bundle,
    decode_container,
    demo,
    encode_container,
    keygen,
    public_key,
    sha256,
    sign,
    verify,
)
from ._fwattest import scenario_json as _scenario_json

__all__ = [
    "Emulator",
    "FwattestError",
    "build_bundle",
    "decode_container",
    "demo",
    "encode_container",
    "keygen",
    "public_key",
    "run_scenario",
    "sha256",
    "sign",
    "verify",
]


def run_scenario(scenario, mode="faarm", trials=50, seed=1,
                 lock_mode="hardware-wp", scheme="ecdsa-p256",
                 firmware_size=64 * 1024):
    """Runs one scenario and returns its report as a dict."""
    text = _scenario_json(scenario, mode, trials, seed, lock_mode, scheme,
                          firmware_size)
    return json.loads(text)["scenarios"][0]
