/*
 *  Copyright 2026 The hesslab Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#include "hesslab/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace hesslab::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& cell, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::Io, "row " + std::to_string(row) + ": cannot parse number '" + cell + "'");
}

bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

}  // namespace

void write_spectrum_csv(std::ostream& out, const lanczos::RitzSpectrum& spectrum) {
  out << "node,weight\n";
  for (std::size_t i = 0; i < spectrum.size(); ++i)
    out << format_double(spectrum.nodes[i]) << ',' << format_double(spectrum.weights[i]) << '\n';
}

lanczos::RitzSpectrum read_spectrum_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line) || line != "node,weight") fail(ErrorCode::Io, "spectrum CSV must start with 'node,weight'");
  lanczos::RitzSpectrum out;
  std::size_t row = 1;
  while (next_line(in, line)) {
    const auto cells = split_row(line);
    if (cells.size() != 2) fail(ErrorCode::Io, "spectrum CSV row " + std::to_string(row) + " needs two columns");
    out.nodes.push_back(parse_double(cells[0], row));
    out.weights.push_back(parse_double(cells[1], row));
    ++row;
  }
  return out;
}

void write_tridiagonal_csv(std::ostream& out, const lanczos::TridiagonalFactor& factor) {
  out << "alpha,beta\n";
  for (std::size_t i = 0; i < factor.alphas.size(); ++i) {
    out << format_double(factor.alphas[i]) << ',';
    if (i < factor.betas.size()) out << format_double(factor.betas[i]);
    out << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_dataset_csv(std::ostream& out, const nn::Dataset& data) {
  data.validate();
  for (Index j = 0; j < data.input_dim(); ++j) out << (j ? "," : "") << "x_" << j;
  if (data.is_classification()) out << ",label";
  else
    for (Index j = 0; j < data.targets.cols(); ++j) out << ",y_" << j;
  out << '\n';
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.input_dim(); ++j) out << (j ? "," : "") << format_double(data.inputs(i, j));
    if (data.is_classification()) out << ',' << data.labels[i];
    else
      for (Index j = 0; j < data.targets.cols(); ++j) out << ',' << format_double(data.targets(i, j));
    out << '\n';
  }
}

nn::Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) fail(ErrorCode::Io, "dataset CSV is empty");
  const auto header = split_row(line);
  Index d_x = 0, d_y = 0;
  bool labelled = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "x_" + std::to_string(d_x) && d_y == 0 && !labelled) ++d_x;
    else if (h == "label" && c + 1 == header.size() && d_y == 0) labelled = true;
    else if (h == "y_" + std::to_string(d_y) && !labelled) ++d_y;
    else fail(ErrorCode::Io, "dataset CSV: unexpected column '" + h + "'");
  }
  if (d_x == 0 || (labelled == (d_y > 0))) fail(ErrorCode::Io, "dataset CSV needs x_ columns and either label or y_ columns");

  std::vector<std::vector<double>> xs, ys;
  std::vector<int> labels;
  std::size_t row = 1;
  while (next_line(in, line)) {
    const auto cells = split_row(line);
    if (cells.size() != header.size()) fail(ErrorCode::Io, "dataset CSV row " + std::to_string(row) + " has the wrong width");
    std::vector<double> x(static_cast<std::size_t>(d_x));
    for (Index j = 0; j < d_x; ++j) x[j] = parse_double(cells[j], row);
    xs.push_back(std::move(x));
    if (labelled) {
      const double y = parse_double(cells.back(), row);
      if (y < 0 || y != std::floor(y)) fail(ErrorCode::Io, "dataset CSV row " + std::to_string(row) + ": bad label");
      labels.push_back(static_cast<int>(y));
    } else {
      std::vector<double> y(static_cast<std::size_t>(d_y));
      for (Index j = 0; j < d_y; ++j) y[j] = parse_double(cells[d_x + j], row);
      ys.push_back(std::move(y));
    }
    ++row;
  }
  if (xs.empty()) fail(ErrorCode::Io, "dataset CSV has no rows");

  nn::Dataset data;
  const auto n = static_cast<Index>(xs.size());
  data.inputs.resize(n, d_x);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d_x; ++j) data.inputs(i, j) = xs[i][j];
  if (labelled) {
    data.labels = std::move(labels);
  } else {
    data.targets.resize(n, d_y);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d_y; ++j) data.targets(i, j) = ys[i][j];
  }
  data.validate();
  return data;
}

void write_history_csv(std::ostream& out, const autolr::TrainingHistory& history) {
  out << "epoch,train_loss,train_err,val_err,alpha,rho\n";
  for (const auto& e : history.epochs)
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.train_err) << ','
        << format_double(e.val_err) << ',' << format_double(e.lr) << ',' << format_double(e.momentum) << '\n';
}

void write_probes_csv(std::ostream& out, const autolr::TrainingHistory& history) {
  out << "epoch,lambda_top,lambda_bottom,alpha,rho,fallback\n";
  for (const auto& p : history.probes)
    out << p.epoch << ',' << format_double(p.lambda_top) << ',' << format_double(p.lambda_bottom) << ','
        << format_double(p.lr) << ',' << format_double(p.momentum) << ',' << (p.fallback ? 1 : 0) << '\n';
}

void write_grid_csv(std::ostream& out, const autolr::GridReport& report) {
  out << "alpha,outcome,diverged_epoch,final_train_loss,final_val_err\n";
  for (const auto& e : report.entries)
    out << format_double(e.lr) << ',' << (e.outcome == autolr::Outcome::Completed ? "completed" : "diverged") << ','
        << e.diverged_epoch << ',' << format_double(e.final_train_loss) << ',' << format_double(e.final_val_err)
        << '\n';
}

std::string spec_to_json(const nn::MlpSpec& spec) {
  nlohmann::json j;
  j["layer_widths"] = spec.layer_widths;
  j["loss"] = spec.loss == nn::Loss::SoftmaxCrossEntropy ? "cross_entropy" : "squared_error";
  return j.dump(2);
}

nn::MlpSpec spec_from_json(const std::string& text) {
  nn::MlpSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    spec.layer_widths = j.at("layer_widths").get<std::vector<Index>>();
    const auto loss = j.value("loss", std::string("cross_entropy"));
    if (loss == "cross_entropy") spec.loss = nn::Loss::SoftmaxCrossEntropy;
    else if (loss == "squared_error") spec.loss = nn::Loss::SquaredError;
    else fail(ErrorCode::InvalidArgument, "unknown loss '" + loss + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("invalid model spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

namespace {

void put_le(std::ostream& out, std::uint64_t bits) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) fail(ErrorCode::Io, "parameter file is truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return bits;
}

}  // namespace

void write_params(std::ostream& out, const nn::ParamVector& params) {
  out.write(kParamMagic, sizeof kParamMagic);
  put_le(out, static_cast<std::uint64_t>(params.size()));
  for (Index i = 0; i < params.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &params(i), 8);
    put_le(out, bits);
  }
  if (!out) fail(ErrorCode::Io, "failed to write parameters");
}

nn::ParamVector read_params(std::istream& in) {
  char magic[sizeof kParamMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kParamMagic, sizeof magic) != 0)
    fail(ErrorCode::Io, "not a parameter file (bad magic)");
  const auto count = static_cast<std::int64_t>(get_le(in));
  if (count < 0 || count > (std::int64_t{1} << 40)) fail(ErrorCode::Io, "parameter file has an invalid length");
  nn::ParamVector out(count);
  for (std::int64_t i = 0; i < count; ++i) {
    const std::uint64_t bits = get_le(in);
    std::memcpy(&out(i), &bits, 8);
  }
  return out;
}

void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) fail(ErrorCode::Io, "cannot write '" + path + "'");
}

std::string load_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace hesslab::io
