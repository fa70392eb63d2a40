#include "xferbench/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "xferbench/error.hpp"

namespace xferbench {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in native order; big-endian hosts need a byte swap");

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw Error(ErrorCode::Parse, path.string() + ": " + err.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void save_checkpoint(const TextToTextModel& model, const fs::path& dir,
                     const nlohmann::json& metadata) {
  fs::create_directories(dir);
  const auto& store = model.parameters();

  nlohmann::ordered_json manifest;
  manifest["backend"] = model.backend_id();
  manifest["vocab_hash"] = hex64(model.vocabulary_hash());
  manifest["config"] = model.config();
  manifest["metadata"] = metadata;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  for (const auto& t : store.tensors()) {
    index.push_back({{"name", t.name}, {"offset", t.offset}, {"shape", t.shape}, {"dtype", "f64"}});
  }
  write_text(dir / "params.index.json", index.dump(2) + "\n");

  std::ofstream blob(dir / "params.bin", std::ios::binary | std::ios::trunc);
  if (!blob) throw Error(ErrorCode::Io, "cannot write params.bin");
  auto flat = store.flat();
  blob.write(reinterpret_cast<const char*>(flat.data()),
             static_cast<std::streamsize>(flat.size() * sizeof(double)));

  if (const auto* toy = dynamic_cast<const ToyModel*>(&model)) {
    toy->vocabulary().save(dir / "vocab.txt");
  }
}

nlohmann::json read_checkpoint_manifest(const fs::path& dir) {
  return read_json(dir / "manifest.json");
}

void load_checkpoint_into(TextToTextModel& model, const fs::path& dir) {
  const auto manifest = read_checkpoint_manifest(dir);
  if (manifest.value("backend", "") != model.backend_id()) {
    throw Error(ErrorCode::CheckpointMismatch,
                "backend " + manifest.value("backend", "?") + " != " + model.backend_id());
  }
  if (manifest.value("vocab_hash", "") != hex64(model.vocabulary_hash())) {
    throw Error(ErrorCode::CheckpointMismatch, "vocabulary hash mismatch");
  }
  auto& store = model.parameters();
  const auto index = read_json(dir / "params.index.json");
  if (!index.is_array() || index.size() != store.tensors().size()) {
    throw Error(ErrorCode::CheckpointMismatch, "tensor count mismatch");
  }
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& t = store.tensors()[i];
    if (index[i].value("name", "") != t.name || index[i].value("offset", std::size_t{0}) != t.offset ||
        index[i].value("shape", std::vector<std::size_t>{}) != t.shape ||
        index[i].value("dtype", "") != "f64") {
      throw Error(ErrorCode::CheckpointMismatch, "tensor layout mismatch at " + t.name);
    }
  }

  std::ifstream blob(dir / "params.bin", std::ios::binary);
  if (!blob) throw Error(ErrorCode::Io, "cannot open params.bin");
  std::vector<double> values(store.size());
  blob.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (blob.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double)) ||
      blob.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::CheckpointMismatch, "params.bin size mismatch");
  }
  store.restore(values);
}

std::unique_ptr<ToyModel> load_toy_checkpoint(const fs::path& dir,
                                              std::optional<std::uint64_t> expected_vocab_hash) {
  const auto manifest = read_checkpoint_manifest(dir);
  if (manifest.value("backend", "") != ToyModel::kBackendId) {
    throw Error(ErrorCode::CheckpointMismatch, "not a toy-backend checkpoint");
  }
  if (expected_vocab_hash && manifest.value("vocab_hash", "") != hex64(*expected_vocab_hash)) {
    throw Error(ErrorCode::CheckpointMismatch, "checkpoint vocabulary does not match corpus");
  }
  auto vocab = Vocabulary::load(dir / "vocab.txt");
  auto model = std::make_unique<ToyModel>(std::move(vocab), manifest.at("config").get<ToyModelConfig>());
  load_checkpoint_into(*model, dir);
  return model;
}

}  // namespace xferbench
