#pragma once

#include "sparsenmf/types.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sparsenmf::io {

/// Malformed file contents. The message carries source, line and column.
struct ParseError : std::runtime_error {
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                           ": " + what),
        line(line),
        column(column) {}
  std::size_t line;
  std::size_t column;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MatrixFormat { csv, whitespace };

/// `.csv` selects comma-separated; anything else is whitespace-separated text.
MatrixFormat format_for_path(const std::filesystem::path& path);

/// Parses a rectangular matrix, one row per line. Blank lines are skipped.
/// Entries may be negative; use `parse_data_matrix` for NMF input.
MatrixXd parse_matrix(std::string_view text, MatrixFormat format,
                      const std::string& source = "<input>");

/// As parse_matrix, rejecting negative entries with their 1-based position.
DataMatrix<double> parse_data_matrix(std::string_view text, MatrixFormat format,
                                     const std::string& source = "<input>");

MatrixXd read_matrix_file(const std::filesystem::path& path, MatrixFormat format);
MatrixXd read_matrix_file(const std::filesystem::path& path);
DataMatrix<double> read_matrix(const std::filesystem::path& path, MatrixFormat format);
DataMatrix<double> read_matrix(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// 17 significant digits, so every double survives a round trip.
std::string format_matrix(const MatrixXd& matrix, MatrixFormat format);
void write_matrix(const MatrixXd& matrix, const std::filesystem::path& path, MatrixFormat format);
void write_matrix(const MatrixXd& matrix, const std::filesystem::path& path);

/// Writes `contents` to `path`, raising IoError with the path on failure.
void write_text(const std::filesystem::path& path, std::string_view contents);

enum class Normalization { per_image, global };

struct ImageGridSpec {
  Index patch_height = 1;
  Index patch_width = 1;
  Index grid_cols = 1;
  Normalization normalization = Normalization::per_image;
};

struct GrayImage {
  Index width = 0;
  Index height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(Index row, Index col) const {
    return pixels[static_cast<std::size_t>(row * width + col)];
  }
};

inline constexpr std::uint8_t kSeparatorGray = 128;

/// Tiles the columns of `basis` as patch_height x patch_width patches (each
/// column read row by row), left to right then top to bottom, with one-pixel
/// mid-gray separators between patches. Weights in [0, max] map linearly to
/// [255, 0], so zero is white and the largest weight is black.
GrayImage render_basis_grid(const MatrixXd& basis, const ImageGridSpec& spec);

/// Binary P5 encoding with maxval 255.
std::string encode_pgm(const GrayImage& image);

void export_basis_grid(const MatrixXd& basis, const ImageGridSpec& spec,
                       const std::filesystem::path& path);
void export_basis_grid(const FactorModel<double>& model, const ImageGridSpec& spec,
                       const std::filesystem::path& path);

}  // namespace sparsenmf::io
