#include "denoise/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "denoise/errors.hpp"

namespace denoise {

namespace {

void write_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
  os << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << std::hexfloat << m(i, j);
    os << std::defaultfloat << '\n';
  }
}

Matrix row_of(const std::array<double, 4>& a) {
  Matrix m(1, 4);
  for (int j = 0; j < 4; ++j) m(0, j) = a[j];
  return m;
}

double parse_real(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') fail(ErrorCode::CheckpointFormat, "bad number '" + tok + "'");
  return v;
}

[[noreturn]] void bad(const std::string& why) { fail(ErrorCode::CheckpointFormat, why); }

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, std::ostream& os) {
  os << "denoise-checkpoint " << kCheckpointVersion << '\n';
  os << "tau_exp " << std::hexfloat << ckpt.tau_exp << std::defaultfloat << '\n';
  const auto normalizer = ckpt.head ? ckpt.head->normalizer : ScoreNormalizer::Variance;
  os << "normalizer " << (normalizer == ScoreNormalizer::Variance ? "variance" : "stddev") << '\n';
  os << "head_inputs " << (ckpt.head && !ckpt.head->standardized ? "raw" : "standardized") << '\n';
  for (std::size_t l = 0; l < ckpt.model.encoder.weights.size(); ++l) {
    write_matrix(os, "encoder." + std::to_string(l), ckpt.model.encoder.weights[l].value());
  }
  write_matrix(os, "decoder.structure_conv", ckpt.model.decoder.structure_conv.value());
  write_matrix(os, "decoder.structure_out", ckpt.model.decoder.structure_out.value());
  write_matrix(os, "decoder.attribute_conv", ckpt.model.decoder.attribute_conv.value());
  write_matrix(os, "decoder.attribute_out", ckpt.model.decoder.attribute_out.value());
  if (ckpt.head) {
    const auto& h = *ckpt.head;
    if (!h.fitted) fail(ErrorCode::UnfittedHead, "refusing to save an unfitted score head");
    write_matrix(os, "head.w1", h.w1);
    write_matrix(os, "head.b1", h.b1);
    write_matrix(os, "head.w2", h.w2);
    write_matrix(os, "head.b2", h.b2);
    write_matrix(os, "head.mu", row_of(h.mu));
    write_matrix(os, "head.sigma2", row_of(h.sigma2));
  }
  os << "end\n";
  if (!os) fail(ErrorCode::Io, "checkpoint write failed");
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::Io, "cannot open " + path.string());
  save_checkpoint(ckpt, os);
}

Checkpoint load_checkpoint(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "denoise-checkpoint") bad("missing header");
  if (version != kCheckpointVersion) bad("unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  std::string normalizer = "variance";
  std::string head_inputs = "standardized";
  std::map<std::string, Matrix> mats;
  std::string word;
  while (is >> word) {
    if (word == "end") break;
    if (word == "tau_exp") {
      std::string v;
      is >> v;
      ckpt.tau_exp = parse_real(v);
    } else if (word == "normalizer") {
      is >> normalizer;
      if (normalizer != "variance" && normalizer != "stddev") bad("unknown normalizer " + normalizer);
    } else if (word == "head_inputs") {
      is >> head_inputs;
      if (head_inputs != "standardized" && head_inputs != "raw") bad("unknown head input mode " + head_inputs);
    } else if (word == "matrix") {
      std::string name;
      Eigen::Index rows = 0;
      Eigen::Index cols = 0;
      if (!(is >> name >> rows >> cols) || rows < 0 || cols < 0) bad("bad matrix header");
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          std::string v;
          if (!(is >> v)) bad("truncated matrix " + name);
          m(i, j) = parse_real(v);
        }
      }
      mats[name] = std::move(m);
    } else {
      bad("unexpected token '" + word + "'");
    }
  }
  if (word != "end") bad("missing end marker");

  auto take = [&](const std::string& name) {
    auto it = mats.find(name);
    if (it == mats.end()) bad("missing matrix " + name);
    return ad::Tensor::parameter(it->second);
  };
  for (std::size_t l = 0; mats.count("encoder." + std::to_string(l)); ++l) {
    ckpt.model.encoder.weights.push_back(take("encoder." + std::to_string(l)));
  }
  if (ckpt.model.encoder.weights.empty()) bad("no encoder layers");
  ckpt.model.decoder.structure_conv = take("decoder.structure_conv");
  ckpt.model.decoder.structure_out = take("decoder.structure_out");
  ckpt.model.decoder.attribute_conv = take("decoder.attribute_conv");
  ckpt.model.decoder.attribute_out = take("decoder.attribute_out");

  if (mats.count("head.w1")) {
    ScoreHead h;
    h.w1 = take("head.w1").value();
    h.b1 = take("head.b1").value();
    h.w2 = take("head.w2").value();
    h.b2 = take("head.b2").value();
    const Matrix mu = take("head.mu").value();
    const Matrix s2 = take("head.sigma2").value();
    if (mu.size() != 4 || s2.size() != 4) bad("head statistics must have 4 entries");
    for (int j = 0; j < 4; ++j) {
      h.mu[j] = mu(0, j);
      h.sigma2[j] = s2(0, j);
    }
    h.normalizer = normalizer == "variance" ? ScoreNormalizer::Variance : ScoreNormalizer::StdDev;
    h.standardized = head_inputs == "standardized";
    h.fitted = true;
    ckpt.head = std::move(h);
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::MissingFile, path.string());
  return load_checkpoint(is);
}

}  // namespace denoise
