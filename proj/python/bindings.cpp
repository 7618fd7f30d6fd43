/*
 *
 * Copyright 2026 The fwattest Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fwattest/crypto.hpp"
#include "fwattest/harness.hpp"
#include "fwattest/monitor.hpp"
#include "fwattest/package.hpp"
#include "fwattest/report.hpp"

namespace py = pybind11;

namespace fwattest {
namespace {

Bytes to_bytes(const py::bytes& b) {
  std::string_view s = b;
  return Bytes(s.begin(), s.end());
}

py::bytes to_py(ByteView b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

crypto::Scheme scheme_arg(const std::string& name) {
  auto s = crypto::parse_scheme(name);
  if (!s) throw py::value_error("unknown scheme: " + name);
  return *s;
}

LockMode lock_mode_arg(const std::string& name) {
  auto m = parse_lock_mode(name);
  if (!m) throw py::value_error("unknown lock mode: " + name);
  return *m;
}

RawBundle raw_from(const py::bytes& firmware, const py::bytes& manifest,
                   const py::bytes& signature) {
  return RawBundle{to_bytes(firmware), to_bytes(manifest),
                   to_bytes(signature)};
}

py::tuple raw_to_tuple(const RawBundle& raw) {
  return py::make_tuple(to_py(raw.firmware), to_py(raw.manifest),
                        to_py(raw.signature));
}

// Region, monitor and in-memory secure state in one object.
class Emulator {
 public:
  Emulator(const py::bytes& anchor, const std::string& lock_mode,
           std::size_t capacity, const std::string& mcu_id,
           std::optional<std::uint64_t> token_seed)
      : region_(std::make_unique<McuRegion>(lock_mode_arg(lock_mode),
                                            capacity)),
        monitor_(std::make_unique<Monitor>(
            *region_,
            MonitorConfig{.mcu_id = mcu_id, .token_seed = token_seed})) {
    monitor_->provision(std::make_unique<MemoryBackend>(),
                        crypto::PublicKey::parse(to_bytes(anchor)));
  }

  py::dict verify_and_lock(const py::bytes& firmware,
                           const py::bytes& manifest,
                           const py::bytes& signature) {
    LoadResult r;
    {
      py::gil_scoped_release release;
      r = monitor_->verify_and_lock(raw_from(firmware, manifest, signature));
    }
    py::dict d;
    d["ok"] = r.ok();
    d["reason"] = r.reason ? py::object(py::str(std::string(
                                 reason_name(*r.reason))))
                           : py::object(py::none());
    d["exit_code"] = r.reason ? exit_code(*r.reason) : kExitSuccess;
    d["detail"] = r.detail;
    if (r.token) {
      d["version"] = r.token->version;
      d["digest"] = r.token->digest.hex();
      d["token"] = r.token->id_hex();
    }
    d["verify_ms"] = r.timings.verify_ms;
    d["lock_ms"] = r.timings.lock_ms;
    d["total_ms"] = r.timings.total_ms;
    return d;
  }

  bool el1_write(std::size_t offset, const py::bytes& data) {
    return region_->el1_write(offset, to_bytes(data)).applied();
  }

  py::bytes region_content() const { return to_py(region_->content()); }

  std::string phase() const {
    return std::string(phase_name(monitor_->status().phase));
  }

  std::uint64_t nv_counter() const { return monitor_->status().nv_counter; }

  std::vector<std::string> audit_lines() const {
    return monitor_->state().audit_lines();
  }

 private:
  std::unique_ptr<McuRegion> region_;
  std::unique_ptr<Monitor> monitor_;
};

std::string scenario_json(const std::string& name, const std::string& mode,
                          std::uint32_t trials, std::uint64_t seed,
                          const std::string& lock_mode,
                          const std::string& scheme,
                          std::size_t firmware_size) {
  harness::Scenario s;
  auto kind = harness::parse_scenario(name);
  if (!kind) throw py::value_error("unknown scenario: " + name);
  auto m = harness::parse_mode(mode);
  if (!m) throw py::value_error("unknown mode: " + mode);
  s.kind = *kind;
  s.mode = *m;
  s.trials = trials;
  s.seed = seed;
  s.lock_mode = lock_mode_arg(lock_mode);
  s.scheme = scheme_arg(scheme);
  s.firmware_size = firmware_size;
  harness::ScenarioReport rep;
  {
    py::gil_scoped_release release;
    rep = harness::run_scenario(s);
  }
  return report::scenarios_json({rep}, {.include_latency = true});
}

}  // namespace
}  // namespace fwattest

PYBIND11_MODULE(_fwattest, m) {
  using namespace fwattest;
  m.doc() = "Firmware attestation emulator: crypto, bundles, monitor, harness";

  py::register_exception<Error>(m, "FwattestError", PyExc_RuntimeError);

  m.def("sha256", [](const py::bytes& data) {
    return to_py(crypto::hash(to_bytes(data)).view());
  });

  m.def(
      "keygen",
      [](const std::string& scheme, std::optional<std::uint64_t> seed,
         bool test_fixture) {
        if (seed && !test_fixture) {
          throw py::value_error("seeded keys require test_fixture=True");
        }
        crypto::KeyPair k = crypto::keygen(
            scheme_arg(scheme), seed,
            test_fixture ? crypto::KeySource::kTestFixture
                         : crypto::KeySource::kProduction);
        return py::make_tuple(to_py(k.serialize_private()),
                              to_py(k.public_key().serialize()));
      },
      py::arg("scheme") = "ecdsa-p256", py::arg("seed") = py::none(),
      py::arg("test_fixture") = false,
      "Returns (private key file bytes, public anchor file bytes).");

  m.def("public_key", [](const py::bytes& private_key) {
    return to_py(
        crypto::KeyPair::parse(to_bytes(private_key)).public_key().serialize());
  });

  m.def("sign", [](const py::bytes& private_key, const py::bytes& payload) {
    auto key = crypto::KeyPair::parse(to_bytes(private_key));
    return to_py(crypto::sign(key, to_bytes(payload)).view());
  });

  m.def("verify",
        [](const py::bytes& anchor, const py::bytes& payload,
           const py::bytes& signature) {
          auto pub = crypto::PublicKey::parse(to_bytes(anchor));
          return crypto::verify(pub, to_bytes(payload), to_bytes(signature));
        });

  m.def(
      "build_bundle",
      [](const py::bytes& firmware, std::uint64_t version,
         const std::string& mcu_id, const std::string& timestamp,
         std::vector<std::string> flags, const py::bytes& private_key) {
        auto key = crypto::KeyPair::parse(to_bytes(private_key));
        FirmwarePackage pkg = build_package(to_bytes(firmware), version,
                                            mcu_id, timestamp,
                                            std::move(flags), key);
        return raw_to_tuple(pkg.raw());
      },
      py::arg("firmware"), py::arg("version"), py::arg("mcu_id"),
      py::arg("timestamp"), py::arg("flags"), py::arg("private_key"),
      "Returns (firmware, canonical manifest, signature).");

  m.def("encode_container",
        [](const py::bytes& firmware, const py::bytes& manifest,
           const py::bytes& signature) {
          return to_py(encode_container(raw_from(firmware, manifest, signature)));
        });

  m.def("decode_container", [](const py::bytes& data) {
    return raw_to_tuple(decode_container(to_bytes(data)));
  });

  py::class_<Emulator>(m, "Emulator")
      .def(py::init<const py::bytes&, const std::string&, std::size_t,
                    const std::string&, std::optional<std::uint64_t>>(),
           py::arg("anchor"), py::arg("lock_mode") = "hardware-wp",
           py::arg("capacity") = kDefaultRegionCapacity,
           py::arg("mcu_id") = "MALI-MCU-XYZ",
           py::arg("token_seed") = py::none())
      .def("verify_and_lock", &Emulator::verify_and_lock, py::arg("firmware"),
           py::arg("manifest"), py::arg("signature"))
      .def("el1_write", &Emulator::el1_write, py::arg("offset"),
           py::arg("data"))
      .def_property_readonly("region_content", &Emulator::region_content)
      .def_property_readonly("phase", &Emulator::phase)
      .def_property_readonly("nv_counter", &Emulator::nv_counter)
      .def("audit_lines", &Emulator::audit_lines);

  m.def("scenario_json", &scenario_json, py::arg("scenario"),
        py::arg("mode") = "faarm", py::arg("trials") = 50,
        py::arg("seed") = 1, py::arg("lock_mode") = "hardware-wp",
        py::arg("scheme") = "ecdsa-p256", py::arg("firmware_size") = 64 * 1024);

  m.def(
      "demo", [](std::uint64_t seed) { return harness::run_demo(seed).lines; },
      py::arg("seed") = 1);
}
