#include "cob/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "cob/error.hpp"

namespace cob {
namespace {

constexpr char kMagic[8] = {'C', 'O', 'B', 'M', '0', '0', '0', '1'};

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw IoError("checkpoint: truncated file");
  return v;
}
uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw IoError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open for write: " + path);
  os.write(kMagic, sizeof(kMagic));

  const ModelConfig& c = model.config();
  write_u32(os, static_cast<uint32_t>(c.image_dim));
  write_u32(os, static_cast<uint32_t>(c.question_dim));
  write_u32(os, static_cast<uint32_t>(c.encoder_out));
  write_u32(os, static_cast<uint32_t>(c.answer_embed_dim));
  write_u32(os, static_cast<uint32_t>(c.hidden_dim));
  write_u32(os, static_cast<uint32_t>(c.joint_dim));
  write_u32(os, static_cast<uint32_t>(c.n_b_dim));
  write_u32(os, static_cast<uint32_t>(c.n_answers));
  write_u64(os, c.init_seed);

  const auto mats = model.named_matrices();
  write_u32(os, static_cast<uint32_t>(mats.size()));
  for (const auto& [name, m] : mats) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<uint32_t>(m->rows()));
    write_u32(os, static_cast<uint32_t>(m->cols()));
    os.write(reinterpret_cast<const char*>(m->data()),
             static_cast<std::streamsize>(sizeof(double)) * m->size());
  }
  if (!os) throw IoError("checkpoint: write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("checkpoint: bad magic in " + path);
  }

  ModelConfig c;
  c.image_dim = static_cast<int>(read_u32(is));
  c.question_dim = static_cast<int>(read_u32(is));
  c.encoder_out = static_cast<int>(read_u32(is));
  c.answer_embed_dim = static_cast<int>(read_u32(is));
  c.hidden_dim = static_cast<int>(read_u32(is));
  c.joint_dim = static_cast<int>(read_u32(is));
  c.n_b_dim = static_cast<int>(read_u32(is));
  c.n_answers = static_cast<int>(read_u32(is));
  c.init_seed = read_u64(is);

  Model model(c);
  auto mats = model.named_matrices();
  const uint32_t count = read_u32(is);
  if (count != mats.size()) {
    throw IoError("checkpoint: matrix count " + std::to_string(count) + " != expected " +
                  std::to_string(mats.size()));
  }
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const int rows = static_cast<int>(read_u32(is));
    const int cols = static_cast<int>(read_u32(is));
    Matrix* target = nullptr;
    for (auto& [n, m] : mats) {
      if (n == name) {
        target = m;
        break;
      }
    }
    if (!target) throw IoError("checkpoint: unknown matrix name '" + name + "'");
    if (target->rows() != rows || target->cols() != cols) {
      throw IoError("checkpoint: shape mismatch for '" + name + "'");
    }
    is.read(reinterpret_cast<char*>(target->data()),
            static_cast<std::streamsize>(sizeof(double)) * target->size());
    if (!is) throw IoError("checkpoint: truncated payload for '" + name + "'");
  }
  return model;
}

}  // namespace cob
