#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cob/matrix.hpp"

namespace cob {

/// Parameters of the compositional attribute-query task. Every sample has a
/// latent (color, shape) pair rendered into the image vector; the question
/// vector encodes which attribute is asked about, and the answer is that
/// attribute's value. Neither modality alone determines the answer.
struct TaskSpec {
  int n_colors = 4;
  int n_shapes = 4;
  int image_dim = 16;
  int question_dim = 8;
  double noise_sigma = 0.3;
  int n_train = 2048;
  int n_val = 512;
  uint64_t seed = 1;

  int n_answers() const { return n_colors + n_shapes; }
  void validate() const;
};

struct Sample {
  std::vector<double> image;
  std::vector<double> question;
  int answer = 0;
  // Latent ground truth, for oracle evaluation only; never a model input.
  int color = 0;
  int shape = 0;
  int query = 0;  // 0 = color asked, 1 = shape asked
};

struct Dataset {
  TaskSpec spec;
  std::vector<Sample> samples;

  int size() const { return static_cast<int>(samples.size()); }
  Matrix images(const std::vector<int>& idx) const;
  Matrix questions(const std::vector<int>& idx) const;
  std::vector<int> answers(const std::vector<int>& idx) const;
  std::vector<int> all_indices() const;
};

/// Deterministic generation: the same spec yields bit-identical datasets, and
/// each sample is a pure function of (spec, global index). Train samples use
/// global indices [0, n_train), validation [n_train, n_train + n_val).
std::pair<Dataset, Dataset> generate(const TaskSpec& spec);

/// Frozen per-answer embedding rows (unit Euclidean norm), the word-embedding
/// stand-in for the answer modality.
class AnswerEmbeddingTable {
 public:
  AnswerEmbeddingTable(int n_answers, int dim, uint64_t seed);

  /// Row-gather. Throws std::out_of_range for invalid indices.
  Matrix embed(const std::vector<int>& answers) const;

  const Matrix& table() const { return table_; }

 private:
  Matrix table_;
};

/// One-file dataset format: a `#taskspec {json}` header line, a CSV column
/// header, then one row per sample with values printed at %.17g (64-bit reals
/// round-trip exactly).
void write_dataset_csv(const std::string& path, const Dataset& train, const Dataset& val);
std::pair<Dataset, Dataset> read_dataset_csv(const std::string& path);

}  // namespace cob
