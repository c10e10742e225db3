// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <string>

#include <boost/crc.hpp>
#include <json.hpp>

#include "spikeforge/error.hpp"

namespace spikeforge {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "spikeforge-weights";

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

void append_f32le(std::vector<unsigned char>& blob, double value) {
  const auto f = static_cast<float>(value);
  auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) blob.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu));
}

double read_f32le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= std::uint32_t{p[i]} << (8 * i);
  return static_cast<double>(std::bit_cast<float>(bits));
}

json tensor_record(const Tensor& t, std::vector<unsigned char>& blob) {
  const std::size_t offset = blob.size();
  for (double v : t.data()) append_f32le(blob, v);
  const std::size_t length = blob.size() - offset;
  return json{{"shape", t.shape()},
              {"offset", offset},
              {"length", length},
              {"crc32", hex32(crc32(std::span<const unsigned char>(blob.data() + offset, length)))}};
}

json activation_json(const ActivationSpec& a) {
  return json{{"family", std::string(to_string(a.family))}, {"theta", a.theta}, {"levels", a.levels}, {"shift", a.shift}};
}

ActivationSpec activation_from(const json& j) {
  ActivationSpec a;
  a.family = parse_activation_family(j.at("family").get<std::string>());
  a.theta = j.value("theta", 1.0);
  a.levels = j.value("levels", 1);
  a.shift = j.value("shift", 0.5);
  a.validate();
  return a;
}

json plan_json(const ThresholdPlan& plan) {
  json layers = json::array();
  for (const auto& l : plan.layers) layers.push_back(json{{"layer", l.layer}, {"theta", l.theta}});
  json j{{"source", plan.source.to_string()},
         {"granularity", std::string(to_string(plan.granularity))},
         {"layers", layers}};
  j["head_theta"] = plan.head_theta ? json(*plan.head_theta) : json(nullptr);
  return j;
}

ThresholdPlan plan_from(const json& j) {
  ThresholdPlan plan;
  plan.source = ThresholdSource::parse(j.at("source").get<std::string>());
  plan.granularity = parse_granularity(j.at("granularity").get<std::string>());
  for (const auto& l : j.at("layers"))
    plan.layers.push_back({l.at("layer").get<std::size_t>(), l.at("theta").get<std::vector<double>>()});
  if (j.contains("head_theta") && !j["head_theta"].is_null()) plan.head_theta = j["head_theta"].get<double>();
  plan.validate();
  return plan;
}

struct BlobReader {
  const std::vector<unsigned char>& blob;
  std::vector<std::pair<std::size_t, std::size_t>> used;

  Tensor read(const json& rec, const std::string& where) {
    const auto shape = rec.at("shape").get<Shape>();
    const auto offset = rec.at("offset").get<std::size_t>();
    const auto length = rec.at("length").get<std::size_t>();
    if (shape.empty()) throw FormatError(where + ": empty tensor shape");
    for (auto d : shape)
      if (d == 0) throw FormatError(where + ": zero tensor dimension");
    if (length != 4 * element_count(shape)) throw FormatError(where + ": blob length does not match shape");
    if (offset > blob.size() || length > blob.size() - offset)
      throw FormatError(where + ": tensor extends past the end of weights.bin (truncated blob?)");
    for (auto [o, l] : used)
      if (offset < o + l && o < offset + length) throw FormatError(where + ": tensor overlaps another tensor");
    used.emplace_back(offset, length);
    const auto expected = rec.at("crc32").get<std::string>();
    const auto actual = hex32(crc32(std::span<const unsigned char>(blob.data() + offset, length)));
    if (expected != actual) throw ChecksumError(where + ": crc32 mismatch (manifest " + expected + ", blob " + actual + ")");
    std::vector<double> values(element_count(shape));
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = read_f32le(blob.data() + offset + 4 * i);
    return Tensor(shape, std::move(values));
  }
};

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::uint32_t crc32(std::span<const unsigned char> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

void write_weights(const ModelGraph& model, const std::filesystem::path& dir, const std::optional<ThresholdPlan>& plan) {
  model.validate();
  std::vector<unsigned char> blob;
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json rec{{"kind", std::string(to_string(kind_of(layer)))}};
    if (auto* l = std::get_if<LinearLayer>(&layer)) {
      rec["in"] = l->weight.dim(1);
      rec["out"] = l->weight.dim(0);
      rec["tensors"] = json{{"weight", tensor_record(l->weight, blob)}, {"bias", tensor_record(l->bias, blob)}};
    } else if (auto* c = std::get_if<Conv2dLayer>(&layer)) {
      rec["stride"] = c->stride;
      rec["pad"] = c->pad;
      rec["tensors"] = json{{"weight", tensor_record(c->weight, blob)}, {"bias", tensor_record(c->bias, blob)}};
    } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      rec["epsilon"] = bn->epsilon;
      json t;
      t["gamma"] = tensor_record(bn->gamma, blob);
      t["beta"] = tensor_record(bn->beta, blob);
      t["running_mean"] = tensor_record(bn->running_mean, blob);
      t["running_var"] = tensor_record(bn->running_var, blob);
      rec["tensors"] = t;
    } else if (auto* p = std::get_if<AvgPoolLayer>(&layer)) {
      rec["kernel"] = p->kernel;
      rec["stride"] = p->stride;
    } else if (auto* a = std::get_if<ActivationLayer>(&layer)) {
      rec["activation"] = activation_json(a->spec);
    }
    layers.push_back(std::move(rec));
  }

  json manifest{{"format", kFormatName},
                {"format_version", kWeightFormatVersion},
                {"input_shape", model.input_shape},
                {"blob", json{{"file", kBlobFile}, {"dtype", "float32-le"}, {"length", blob.size()}}},
                {"layers", layers}};
  if (plan) {
    plan->validate();
    manifest["calibration"] = plan_json(*plan);
  }

  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / kBlobFile, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!out) throw FormatError("failed writing " + (dir / kBlobFile).string());
  }
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + (dir / kManifestFile).string());
}

WeightBundle read_weight_bundle(const std::filesystem::path& dir) {
  json manifest;
  {
    std::ifstream in(dir / kManifestFile);
    if (!in) throw FormatError("cannot open " + (dir / kManifestFile).string());
    try {
      manifest = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError("manifest.json is not valid JSON: " + std::string(e.what()));
    }
  }
  try {
    if (manifest.value("format", std::string{}) != kFormatName) throw FormatError("manifest format is not " + std::string(kFormatName));
    const int version = manifest.at("format_version").get<int>();
    if (version != kWeightFormatVersion)
      throw FormatError("unsupported weight format version " + std::to_string(version) + " (expected " +
                        std::to_string(kWeightFormatVersion) + ")");
    const auto blob = read_bytes(dir / manifest.at("blob").value("file", std::string(kBlobFile)));
    if (blob.size() != manifest.at("blob").at("length").get<std::size_t>())
      throw FormatError("weights.bin holds " + std::to_string(blob.size()) + " bytes, manifest declares " +
                        std::to_string(manifest.at("blob").at("length").get<std::size_t>()));

    WeightBundle bundle;
    bundle.model.input_shape = manifest.at("input_shape").get<Shape>();
    const auto& layers = manifest.at("layers");
    if (!layers.is_array() || layers.empty()) throw StructureError("manifest lists no layers");

    BlobReader reader{blob, {}};
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& rec = layers[i];
      const std::string where = "layer " + std::to_string(i);
      switch (parse_layer_kind(rec.at("kind").get<std::string>())) {
        case LayerKind::linear: {
          const auto& t = rec.at("tensors");
          bundle.model.layers.emplace_back(LinearLayer{reader.read(t.at("weight"), where + " weight"),
                                                       reader.read(t.at("bias"), where + " bias")});
          break;
        }
        case LayerKind::conv2d: {
          const auto& t = rec.at("tensors");
          bundle.model.layers.emplace_back(Conv2dLayer{reader.read(t.at("weight"), where + " weight"),
                                                       reader.read(t.at("bias"), where + " bias"),
                                                       rec.at("stride").get<std::size_t>(),
                                                       rec.at("pad").get<std::size_t>()});
          break;
        }
        case LayerKind::batchnorm: {
          const auto& t = rec.at("tensors");
          bundle.model.layers.emplace_back(BatchNormLayer{
              reader.read(t.at("gamma"), where + " gamma"), reader.read(t.at("beta"), where + " beta"),
              reader.read(t.at("running_mean"), where + " running_mean"),
              reader.read(t.at("running_var"), where + " running_var"), rec.at("epsilon").get<double>()});
          break;
        }
        case LayerKind::avgpool:
          bundle.model.layers.emplace_back(
              AvgPoolLayer{rec.at("kernel").get<std::size_t>(), rec.at("stride").get<std::size_t>()});
          break;
        case LayerKind::flatten:
          bundle.model.layers.emplace_back(FlattenLayer{});
          break;
        case LayerKind::activation:
          bundle.model.layers.emplace_back(ActivationLayer{activation_from(rec.at("activation"))});
          break;
      }
    }
    bundle.model.validate();
    if (manifest.contains("calibration")) bundle.plan = plan_from(manifest["calibration"]);
    return bundle;
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest.json: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw FormatError("malformed manifest.json: " + std::string(e.what()));
  }
}

ModelGraph read_weights(const std::filesystem::path& dir) { return read_weight_bundle(dir).model; }

}  // namespace spikeforge
