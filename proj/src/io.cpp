#include "sparsenmf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sparsenmf::io {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based field index
};

std::vector<Token> split_line(std::string_view line, MatrixFormat format) {
  std::vector<Token> tokens;
  if (format == MatrixFormat::csv) {
    std::size_t start = 0;
    std::size_t field = 1;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string_view piece = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      while (!piece.empty() && is_space(piece.front())) piece.remove_prefix(1);
      while (!piece.empty() && is_space(piece.back())) piece.remove_suffix(1);
      tokens.push_back({piece, field++});
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  } else {
    std::size_t i = 0;
    std::size_t field = 1;
    while (i < line.size()) {
      while (i < line.size() && is_space(line[i])) ++i;
      if (i >= line.size()) break;
      const std::size_t begin = i;
      while (i < line.size() && !is_space(line[i])) ++i;
      tokens.push_back({line.substr(begin, i - begin), field++});
    }
  }
  return tokens;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); });
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return buffer.str();
}

}  // namespace

MatrixFormat format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? MatrixFormat::csv : MatrixFormat::whitespace;
}

namespace {

MatrixXd parse_impl(std::string_view text, MatrixFormat format, const std::string& source,
                    bool require_nonneg) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (blank(line)) continue;

    std::vector<double> row;
    for (const Token& tok : split_line(line, format)) {
      if (tok.text.empty()) throw ParseError(source, line_no, tok.column, "empty field");
      double value = 0.0;
      const char* first = tok.text.data();
      const char* last = first + tok.text.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last || !std::isfinite(value))
        throw ParseError(source, line_no, tok.column,
                         "not a finite number: '" + std::string(tok.text) + "'");
      if (require_nonneg && value < 0.0)
        throw ParseError(source, line_no, tok.column,
                         "negative entry " + std::string(tok.text) +
                             " (data matrix must be non-negative)");
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(source, line_no, std::min(row.size(), rows.front().size()) + 1,
                       "row has " + std::to_string(row.size()) + " fields, expected " +
                           std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source, line_no, 1, "no data rows");

  MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return out;
}

}  // namespace

MatrixXd parse_matrix(std::string_view text, MatrixFormat format, const std::string& source) {
  return parse_impl(text, format, source, false);
}

DataMatrix<double> parse_data_matrix(std::string_view text, MatrixFormat format, const std::string& source) {
  return DataMatrix<double>(parse_impl(text, format, source, true));
}

MatrixXd read_matrix_file(const std::filesystem::path& path, MatrixFormat format) {
  return parse_matrix(slurp(path), format, path.string());
}

MatrixXd read_matrix_file(const std::filesystem::path& path) {
  return read_matrix_file(path, format_for_path(path));
}

DataMatrix<double> read_matrix(const std::filesystem::path& path, MatrixFormat format) {
  return parse_data_matrix(slurp(path), format, path.string());
}

DataMatrix<double> read_matrix(const std::filesystem::path& path) {
  return read_matrix(path, format_for_path(path));
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_matrix(const MatrixXd& matrix, MatrixFormat format) {
  if (matrix.rows() < 1 || matrix.cols() < 1)
    throw DimensionError("refusing to write a matrix with an empty dimension");
  const char sep = format == MatrixFormat::csv ? ',' : ' ';
  std::string out;
  char buf[32];
  for (Index i = 0; i < matrix.rows(); ++i) {
    for (Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) out.push_back(sep);
      const int len = std::snprintf(buf, sizeof buf, "%.17g", matrix(i, j));
      out.append(buf, static_cast<std::size_t>(len));
    }
    out.push_back('\n');
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

void write_matrix(const MatrixXd& matrix, const std::filesystem::path& path, MatrixFormat format) {
  write_text(path, format_matrix(matrix, format));
}

void write_matrix(const MatrixXd& matrix, const std::filesystem::path& path) {
  write_matrix(matrix, path, format_for_path(path));
}

GrayImage render_basis_grid(const MatrixXd& basis, const ImageGridSpec& spec) {
  if (spec.patch_height < 1 || spec.patch_width < 1 || spec.grid_cols < 1)
    throw InvalidValueError("patch dimensions and grid columns must be positive");
  if (spec.patch_height * spec.patch_width != basis.rows())
    throw DimensionError("patch " + std::to_string(spec.patch_height) + "x" +
                         std::to_string(spec.patch_width) + " does not cover " +
                         std::to_string(basis.rows()) + " basis rows");
  if (basis.cols() < 1) throw DimensionError("basis has no columns");
  if ((basis.array() < 0.0).any()) throw InvalidValueError("basis must be non-negative");

  const Index count = basis.cols();
  const Index cols = std::min(spec.grid_cols, count);
  const Index rows = (count + cols - 1) / cols;
  GrayImage img;
  img.width = cols * spec.patch_width + (cols - 1);
  img.height = rows * spec.patch_height + (rows - 1);
  img.pixels.assign(static_cast<std::size_t>(img.width * img.height), kSeparatorGray);

  const double global_max = basis.maxCoeff();
  for (Index k = 0; k < count; ++k) {
    const double peak = spec.normalization == Normalization::global ? global_max : basis.col(k).maxCoeff();
    const Index top = (k / cols) * (spec.patch_height + 1);
    const Index left = (k % cols) * (spec.patch_width + 1);
    for (Index r = 0; r < spec.patch_height; ++r) {
      for (Index c = 0; c < spec.patch_width; ++c) {
        const double v = basis(r * spec.patch_width + c, k);
        const double level = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) : 0.0;
        img.pixels[static_cast<std::size_t>((top + r) * img.width + left + c)] =
            static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - level)));
      }
    }
  }
  return img;
}

std::string encode_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  return out;
}

void export_basis_grid(const MatrixXd& basis, const ImageGridSpec& spec, const std::filesystem::path& path) {
  write_text(path, encode_pgm(render_basis_grid(basis, spec)));
}

void export_basis_grid(const FactorModel<double>& model, const ImageGridSpec& spec,
                       const std::filesystem::path& path) {
  export_basis_grid(model.basis, spec, path);
}

}  // namespace sparsenmf::io
