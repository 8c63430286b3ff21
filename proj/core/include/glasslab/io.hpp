#ifndef GLASSLAB_IO_HPP
#define GLASSLAB_IO_HPP

#include <string>
#include <vector>

namespace glasslab {

// Shortest round-trip decimal form, locale-independent.
std::string format_double(double v);
// RFC-4180 quoting.
std::string csv_escape(const std::string& field);

struct DataTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string to_csv() const;
};

void write_text_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

}  // namespace glasslab

#endif
