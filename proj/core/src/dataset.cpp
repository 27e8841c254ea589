#include "faultcast/dataset.hpp"

#include <cstdlib>
#include <sstream>

#include "faultcast/error.hpp"
#include "faultcast/text.hpp"

namespace faultcast::learn {

Matrix Matrix::gather_rows(std::span<const uint32_t> idx) const {
  Matrix out(idx.size(), cols);
  for (size_t r = 0; r < idx.size(); ++r)
    for (size_t c = 0; c < cols; ++c) out.at(r, c) = at(idx[r], c);
  return out;
}

Matrix Matrix::gather_cols(std::span<const int> idx) const {
  Matrix out(rows, idx.size());
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < idx.size(); ++c) out.at(r, c) = at(r, static_cast<size_t>(idx[c]));
  return out;
}

const char* target_name(Target t) { return t == Target::Success ? "success" : "interruption"; }

const std::vector<double>& target_of(const Dataset& d, Target t) {
  return t == Target::Success ? d.success : d.interruption;
}

namespace {

double parse_rate(std::string_view field, int line_no, const char* what) {
  std::string text(field);
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || text.empty())
    throw ParseError(std::string("bad ") + what + " value '" + text + "'", line_no);
  return v;
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]).empty()) throw ParseError("empty dataset", 1);

  auto header = split(trim(lines[0]), ',');
  if (header.size() < 4 || header.front() != "id" ||
      header[header.size() - 2] != "success" || header.back() != "interruption")
    throw ParseError("expected header id,f0,...,success,interruption", 1);
  size_t d = header.size() - 3;
  for (size_t i = 0; i < d; ++i)
    if (header[1 + i] != "f" + std::to_string(i))
      throw ParseError("bad feature column '" + std::string(header[1 + i]) + "'", 1);

  Dataset ds;
  std::vector<double> values;
  int line_no = 1;
  for (size_t li = 1; li < lines.size(); ++li) {
    ++line_no;
    std::string_view line = trim(lines[li]);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != d + 3)
      throw ParseError("expected " + std::to_string(d + 3) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    ds.ids.emplace_back(fields[0]);
    for (size_t i = 0; i < d; ++i) values.push_back(parse_rate(fields[1 + i], line_no, "feature"));
    double s = parse_rate(fields[d + 1], line_no, "success");
    double ir = parse_rate(fields[d + 2], line_no, "interruption");
    if (s < 0.0 || s > 1.0 || ir < 0.0 || ir > 1.0)
      throw ParseError("target rate out of [0,1]", line_no);
    ds.success.push_back(s);
    ds.interruption.push_back(ir);
  }
  ds.x.rows = ds.ids.size();
  ds.x.cols = d;
  ds.x.data = std::move(values);
  return ds;
}

std::string serialize_dataset_csv(const Dataset& d) {
  std::ostringstream out;
  out << "id";
  for (size_t i = 0; i < d.x.cols; ++i) out << ",f" << i;
  out << ",success,interruption\n";
  for (size_t r = 0; r < d.size(); ++r) {
    out << d.ids[r];
    for (size_t c = 0; c < d.x.cols; ++c) out << ',' << fmt_g9(d.x.at(r, c));
    out << ',' << fmt_g9(d.success[r]) << ',' << fmt_g9(d.interruption[r]) << '\n';
  }
  return out.str();
}

}  // namespace faultcast::learn
