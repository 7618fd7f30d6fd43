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

import hashlib
import os

import pytest

import fwattest

STAMP = "2025-10-10T12:00:00Z"
MCU = "MALI-MCU-XYZ"


@pytest.fixture(params=["ecdsa-p256", "ed25519"])
def vendor_key(request):
    return fwattest.keygen(request.param, seed=3, test_fixture=True)


def test_sha256_matches_hashlib():
    for n in (0, 1, 55, 56, 64, 1000, 65537):
        data = os.urandom(n)
        assert fwattest.sha256(data) == hashlib.sha256(data).digest()


def test_seed_requires_test_fixture():
    with pytest.raises(ValueError):
        fwattest.keygen("ed25519", seed=1)


def test_sign_verify_round_trip(vendor_key):
    priv, pub = vendor_key
    assert fwattest.public_key(priv) == pub
    sig = fwattest.sign(priv, b"payload")
    assert len(sig) == 64
    assert fwattest.verify(pub, b"payload", sig)
    assert not fwattest.verify(pub, b"payload!", sig)


def test_bundle_container_round_trip(vendor_key):
    priv, _ = vendor_key
    parts = fwattest.build_bundle(os.urandom(2048), 3, MCU, STAMP,
                                  ["requires_lock"], priv)
    blob = fwattest.encode_container(*parts)
    assert blob[:4] == b"FPK1"
    assert fwattest.decode_container(blob) == parts
    assert hashlib.sha256(parts[0]).hexdigest().encode() in parts[1]


def test_emulator_accepts_signed_and_rejects_tampered(vendor_key):
    priv, pub = vendor_key
    firmware = os.urandom(4096)
    fw, manifest, sig = fwattest.build_bundle(firmware, 3, MCU, STAMP,
                                              ["requires_lock"], priv)
    emu = fwattest.Emulator(pub)

    bad = bytearray(fw)
    bad[10] ^= 0x01
    r = emu.verify_and_lock(bytes(bad), manifest, sig)
    assert not r["ok"]
    assert r["reason"] == "HashMismatch"
    assert r["exit_code"] == 11
    assert emu.nv_counter == 0

    r = emu.verify_and_lock(fw, manifest, sig)
    assert r["ok"], r["detail"]
    assert r["version"] == 3
    assert emu.phase == "Loaded-Locked"
    assert emu.nv_counter == 3
    assert not emu.el1_write(0, b"\x00" * 16)
    assert emu.region_content == firmware

    r = emu.verify_and_lock(fw, manifest, sig)
    assert r["reason"] == "Rollback"
    events = [line for line in emu.audit_lines() if "WRITE_DENIED" in line]
    assert len(events) == 1


def test_scenario_report():
    faarm = fwattest.run_scenario("TamperBeforeVerify", trials=10, seed=4)
    assert faarm["attack_success_count"] == 0
    assert faarm["blocked_count"] == 10
    assert faarm["reconciled"]
    assert faarm["latency"]["total"]["samples"] == 10

    base = fwattest.run_scenario("TamperBeforeVerify", mode="baseline",
                                 trials=10, seed=4)
    assert base["attack_success_count"] == 10


def test_demo_transcript():
    lines = fwattest.demo()
    assert any("BEFORE" in line for line in lines)
    assert any("REJECTED (HashMismatch)" in line for line in lines)
