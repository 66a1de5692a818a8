#include "cob/synthdata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cob/error.hpp"
#include "cob/rng.hpp"

namespace cob {
namespace {

enum : uint64_t {
  kStreamColorTemplate = 11,
  kStreamShapeTemplate = 12,
  kStreamQueryTemplate = 13,
  kStreamSample = 14,
};

std::vector<double> unit_vector(int dim, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(dim));
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.gaussian();
    norm2 += x * x;
  }
  if (norm2 < 1e-24) {
    v[0] = 1.0;
    norm2 = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

struct Templates {
  std::vector<std::vector<double>> colors;  // dim = color part of image
  std::vector<std::vector<double>> shapes;  // dim = shape part of image
  std::vector<std::vector<double>> queries; // dim = question_dim, one per attribute
};

Templates make_templates(const TaskSpec& spec) {
  Templates t;
  const int d_color = (spec.image_dim + 1) / 2;
  const int d_shape = spec.image_dim - d_color;
  for (int c = 0; c < spec.n_colors; ++c) {
    Rng rng = Rng::stream(spec.seed, kStreamColorTemplate, static_cast<uint64_t>(c));
    t.colors.push_back(unit_vector(d_color, rng));
  }
  for (int s = 0; s < spec.n_shapes; ++s) {
    Rng rng = Rng::stream(spec.seed, kStreamShapeTemplate, static_cast<uint64_t>(s));
    t.shapes.push_back(unit_vector(d_shape, rng));
  }
  for (int q = 0; q < 2; ++q) {
    Rng rng = Rng::stream(spec.seed, kStreamQueryTemplate, static_cast<uint64_t>(q));
    t.queries.push_back(unit_vector(spec.question_dim, rng));
  }
  return t;
}

Sample make_sample(const TaskSpec& spec, const Templates& t, uint64_t global_index) {
  Rng rng = Rng::stream(spec.seed, kStreamSample, global_index);
  Sample s;
  s.color = rng.uniform_int(spec.n_colors);
  s.shape = rng.uniform_int(spec.n_shapes);
  s.query = rng.uniform_int(2);
  s.answer = s.query == 0 ? s.color : spec.n_colors + s.shape;

  const auto& ct = t.colors[static_cast<size_t>(s.color)];
  const auto& st = t.shapes[static_cast<size_t>(s.shape)];
  s.image.reserve(static_cast<size_t>(spec.image_dim));
  for (double x : ct) s.image.push_back(x + spec.noise_sigma * rng.gaussian());
  for (double x : st) s.image.push_back(x + spec.noise_sigma * rng.gaussian());

  const auto& qt = t.queries[static_cast<size_t>(s.query)];
  s.question.reserve(static_cast<size_t>(spec.question_dim));
  for (double x : qt) s.question.push_back(x + spec.noise_sigma * rng.gaussian());
  return s;
}

Matrix rows_to_matrix(const std::vector<Sample>& samples, const std::vector<int>& idx,
                      bool image, int dim) {
  Matrix out(static_cast<int>(idx.size()), dim);
  for (size_t r = 0; r < idx.size(); ++r) {
    const int i = idx[r];
    if (i < 0 || i >= static_cast<int>(samples.size())) {
      throw std::out_of_range("Dataset: sample index out of range");
    }
    const std::vector<double>& src =
        image ? samples[static_cast<size_t>(i)].image : samples[static_cast<size_t>(i)].question;
    for (int c = 0; c < dim; ++c) out(static_cast<int>(r), c) = src[static_cast<size_t>(c)];
  }
  return out;
}

void format_g17(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void TaskSpec::validate() const {
  if (n_colors < 2) throw ConfigError("task.n_colors must be >= 2");
  if (n_shapes < 2) throw ConfigError("task.n_shapes must be >= 2");
  if (image_dim < 2) throw ConfigError("task.image_dim must be >= 2");
  if (question_dim < 1) throw ConfigError("task.question_dim must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("task.noise_sigma must be >= 0");
  if (n_train < 1) throw ConfigError("task.n_train must be >= 1");
  if (n_val < 1) throw ConfigError("task.n_val must be >= 1");
}

Matrix Dataset::images(const std::vector<int>& idx) const {
  return rows_to_matrix(samples, idx, true, spec.image_dim);
}

Matrix Dataset::questions(const std::vector<int>& idx) const {
  return rows_to_matrix(samples, idx, false, spec.question_dim);
}

std::vector<int> Dataset::answers(const std::vector<int>& idx) const {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(samples.at(static_cast<size_t>(i)).answer);
  return out;
}

std::vector<int> Dataset::all_indices() const {
  std::vector<int> idx(samples.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  return idx;
}

std::pair<Dataset, Dataset> generate(const TaskSpec& spec) {
  spec.validate();
  const Templates t = make_templates(spec);
  Dataset train{spec, {}};
  Dataset val{spec, {}};
  train.samples.reserve(static_cast<size_t>(spec.n_train));
  val.samples.reserve(static_cast<size_t>(spec.n_val));
  for (int i = 0; i < spec.n_train; ++i) {
    train.samples.push_back(make_sample(spec, t, static_cast<uint64_t>(i)));
  }
  for (int j = 0; j < spec.n_val; ++j) {
    val.samples.push_back(make_sample(spec, t, static_cast<uint64_t>(spec.n_train + j)));
  }
  return {std::move(train), std::move(val)};
}

AnswerEmbeddingTable::AnswerEmbeddingTable(int n_answers, int dim, uint64_t seed) {
  if (n_answers < 1 || dim < 1) throw ConfigError("AnswerEmbeddingTable: invalid dimensions");
  table_ = Matrix(n_answers, dim);
  for (int r = 0; r < n_answers; ++r) {
    Rng rng = Rng::stream(seed, 21, static_cast<uint64_t>(r));
    const std::vector<double> row = unit_vector(dim, rng);
    for (int c = 0; c < dim; ++c) table_(r, c) = row[static_cast<size_t>(c)];
  }
}

Matrix AnswerEmbeddingTable::embed(const std::vector<int>& answers) const {
  Matrix out(static_cast<int>(answers.size()), table_.cols());
  for (size_t r = 0; r < answers.size(); ++r) {
    const int a = answers[r];
    if (a < 0 || a >= table_.rows()) {
      throw std::out_of_range("AnswerEmbeddingTable::embed: index " + std::to_string(a) +
                              " out of range [0," + std::to_string(table_.rows()) + ")");
    }
    for (int c = 0; c < table_.cols(); ++c) out(static_cast<int>(r), c) = table_(a, c);
  }
  return out;
}

void write_dataset_csv(const std::string& path, const Dataset& train, const Dataset& val) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("dataset: cannot open for write: " + path);
  const TaskSpec& s = train.spec;
  os << "#taskspec {\"n_colors\":" << s.n_colors << ",\"n_shapes\":" << s.n_shapes
     << ",\"image_dim\":" << s.image_dim << ",\"question_dim\":" << s.question_dim
     << ",\"noise_sigma\":";
  std::string sigma;
  format_g17(sigma, s.noise_sigma);
  os << sigma << ",\"n_train\":" << s.n_train << ",\"n_val\":" << s.n_val
     << ",\"seed\":" << s.seed << "}\n";

  os << "split,answer,color,shape,query";
  for (int c = 0; c < s.image_dim; ++c) os << ",v" << c;
  for (int c = 0; c < s.question_dim; ++c) os << ",q" << c;
  os << "\n";

  auto write_split = [&](const Dataset& d, const char* name) {
    for (const Sample& smp : d.samples) {
      std::string line = name;
      line += "," + std::to_string(smp.answer) + "," + std::to_string(smp.color) + "," +
              std::to_string(smp.shape) + "," + std::to_string(smp.query);
      for (double v : smp.image) {
        line += ",";
        format_g17(line, v);
      }
      for (double v : smp.question) {
        line += ",";
        format_g17(line, v);
      }
      os << line << "\n";
    }
  };
  write_split(train, "train");
  write_split(val, "val");
  if (!os) throw IoError("dataset: write failed: " + path);
}

std::pair<Dataset, Dataset> read_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("dataset: cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("#taskspec ", 0) != 0) {
    throw IoError("dataset: missing #taskspec header in " + path);
  }

  TaskSpec spec;
  const std::string js = line.substr(10);
  auto grab = [&](const char* key) -> std::string {
    const std::string pat = std::string("\"") + key + "\":";
    const size_t p = js.find(pat);
    if (p == std::string::npos) throw IoError(std::string("dataset: header missing ") + key);
    size_t start = p + pat.size();
    size_t end = js.find_first_of(",}", start);
    return js.substr(start, end - start);
  };
  spec.n_colors = std::stoi(grab("n_colors"));
  spec.n_shapes = std::stoi(grab("n_shapes"));
  spec.image_dim = std::stoi(grab("image_dim"));
  spec.question_dim = std::stoi(grab("question_dim"));
  spec.noise_sigma = std::stod(grab("noise_sigma"));
  spec.n_train = std::stoi(grab("n_train"));
  spec.n_val = std::stoi(grab("n_val"));
  spec.seed = std::stoull(grab("seed"));

  if (!std::getline(is, line)) throw IoError("dataset: missing column header");

  Dataset train{spec, {}};
  Dataset val{spec, {}};
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    auto next = [&]() -> std::string {
      if (!std::getline(ss, field, ',')) throw IoError("dataset: short row");
      return field;
    };
    const std::string split = next();
    Sample smp;
    smp.answer = std::stoi(next());
    smp.color = std::stoi(next());
    smp.shape = std::stoi(next());
    smp.query = std::stoi(next());
    smp.image.reserve(static_cast<size_t>(spec.image_dim));
    for (int c = 0; c < spec.image_dim; ++c) smp.image.push_back(std::stod(next()));
    smp.question.reserve(static_cast<size_t>(spec.question_dim));
    for (int c = 0; c < spec.question_dim; ++c) smp.question.push_back(std::stod(next()));
    if (split == "train") {
      train.samples.push_back(std::move(smp));
    } else if (split == "val") {
      val.samples.push_back(std::move(smp));
    } else {
      throw IoError("dataset: unknown split '" + split + "'");
    }
  }
  if (static_cast<int>(train.samples.size()) != spec.n_train ||
      static_cast<int>(val.samples.size()) != spec.n_val) {
    throw IoError("dataset: row counts do not match header in " + path);
  }
  return {std::move(train), std::move(val)};
}

}  // namespace cob
