#include "spgadmm/error.hpp"
#include "spgadmm/problem.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace spgadmm {

using nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

void write_array(std::ostringstream& os, const Eigen::VectorXd& v) {
  os << '[';
  for (Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_double(v(i));
  os << ']';
}

void write_dims(std::ostringstream& os, const Dims& d) {
  os << '[';
  for (std::size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
  os << ']';
}

void write_matrix(std::ostringstream& os, const Eigen::MatrixXd& m, const char* indent) {
  os << "[\n";
  for (Index i = 0; i < m.rows(); ++i) {
    os << indent << "  ";
    write_array(os, m.row(i).transpose());
    os << (i + 1 < m.rows() ? ",\n" : "\n");
  }
  os << indent << ']';
}

void write_function(std::ostringstream& os, const ConvexFunction& fn) {
  const NonsmoothPart& h = fn.nonsmooth();
  os << "{\n    \"nonsmooth\": {\"kind\": \"" << to_string(h.kind) << '"';
  if (h.kind == NonsmoothPart::Kind::l1) os << ", \"weight\": " << format_double(h.weight);
  if (h.kind == NonsmoothPart::Kind::box)
    os << ", \"lo\": " << format_double(h.lo) << ", \"hi\": " << format_double(h.hi);
  os << "},\n    \"Q\": ";
  write_matrix(os, fn.Q().matrix(), "    ");
  os << ",\n    \"q\": ";
  write_array(os, fn.q().values());
  os << ",\n    \"r\": " << format_double(fn.r()) << "\n  }";
}

const json& field(const json& obj, const char* name, const std::string& path) {
  if (!obj.is_object()) throw ParseError("'" + path + "' is not an object");
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError("missing field '" + (path.empty() ? "" : path + ".") + name + "'");
  return *it;
}

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError("field '" + path + "' must be a number");
  return j.get<double>();
}

Eigen::VectorXd read_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError("field '" + path + "' must be an array");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Index>(i)) = read_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Dims read_dims(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError("field '" + path + "' must be a non-empty array");
  Dims d;
  for (const auto& e : j) {
    if (!e.is_number_integer() || e.get<long long>() <= 0)
      throw ValidationError(path, "block dimensions must be positive integers");
    d.push_back(e.get<Index>());
  }
  return d;
}

Eigen::MatrixXd read_matrix(const json& j, const std::string& path, Index rows, Index cols) {
  if (!j.is_array()) throw ParseError("field '" + path + "' must be an array of rows");
  if (static_cast<Index>(j.size()) != rows)
    throw ValidationError(path, "expected " + std::to_string(rows) + " rows, got " +
                                    std::to_string(j.size()));
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    const Eigen::VectorXd row = read_array(j[static_cast<std::size_t>(i)], rp);
    if (row.size() != cols)
      throw ValidationError(path, "row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                                      " entries, expected " + std::to_string(cols));
    m.row(i) = row.transpose();
  }
  return m;
}

BlockVector read_vector(const json& j, const std::string& path, const Dims& dims) {
  Eigen::VectorXd v = read_array(j, path);
  if (v.size() != total_dim(dims))
    throw ValidationError(path, "expected length " + std::to_string(total_dim(dims)) + ", got " +
                                    std::to_string(v.size()));
  return BlockVector(dims, std::move(v));
}

ConvexFunction read_function(const json& j, const std::string& path, const Dims& dims) {
  const json& ns = field(j, "nonsmooth", path);
  const std::string kind = field(ns, "kind", path + ".nonsmooth").get<std::string>();
  NonsmoothPart h;
  try {
    if (kind == "zero") {
      h = NonsmoothPart::none();
    } else if (kind == "l1") {
      h = NonsmoothPart::l1(read_number(field(ns, "weight", path + ".nonsmooth"), path + ".nonsmooth.weight"));
    } else if (kind == "box") {
      h = NonsmoothPart::box(read_number(field(ns, "lo", path + ".nonsmooth"), path + ".nonsmooth.lo"),
                             read_number(field(ns, "hi", path + ".nonsmooth"), path + ".nonsmooth.hi"));
    } else {
      throw ValidationError(path + ".nonsmooth.kind", "unknown kind '" + kind + "'");
    }
  } catch (const DomainError& e) {
    throw ValidationError(path + ".nonsmooth", e.what());
  }
  const Index n = total_dim(dims);
  Eigen::MatrixXd Q = read_matrix(field(j, "Q", path), path + ".Q", n, n);
  BlockVector q = read_vector(field(j, "q", path), path + ".q", dims);
  const double r = read_number(field(j, "r", path), path + ".r");
  try {
    return ConvexFunction(h, PsdOperator(dims, std::move(Q)), std::move(q), r);
  } catch (const PsdViolation& e) {
    throw ValidationError(path + ".Q", e.what());
  } catch (const ConfigError& e) {
    throw ValidationError(path + ".Q", e.what());
  }
}

std::string position_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string serialize_instance(const ProblemInstance& inst, const std::optional<KnownSolution>& sol) {
  std::ostringstream os;
  os << "{\n  \"version\": 1,\n  \"x_dims\": ";
  write_dims(os, inst.x_dims());
  os << ",\n  \"y_dims\": ";
  write_dims(os, inst.y_dims());
  os << ",\n  \"z_dims\": ";
  write_dims(os, inst.z_dims());
  os << ",\n  \"A\": ";
  write_matrix(os, inst.A().matrix(), "  ");
  os << ",\n  \"B\": ";
  write_matrix(os, inst.B().matrix(), "  ");
  os << ",\n  \"c\": ";
  write_array(os, inst.c().values());
  os << ",\n  \"f\": ";
  write_function(os, inst.f());
  os << ",\n  \"g\": ";
  write_function(os, inst.g());
  if (sol) {
    os << ",\n  \"known_solution\": {\n    \"y\": ";
    write_array(os, sol->y.values());
    os << ",\n    \"z\": ";
    write_array(os, sol->z.values());
    os << ",\n    \"x\": ";
    write_array(os, sol->x.values());
    os << "\n  }";
  }
  os << "\n}\n";
  return os.str();
}

LoadedProblem parse_instance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON at " + position_context(text, e.byte > 0 ? e.byte - 1 : 0) +
                     ": " + e.what());
  }
  try {
    const double version = read_number(field(doc, "version", ""), "version");
    if (version != 1) throw ValidationError("version", "unsupported version");
    const Dims xd = read_dims(field(doc, "x_dims", ""), "x_dims");
    const Dims yd = read_dims(field(doc, "y_dims", ""), "y_dims");
    const Dims zd = read_dims(field(doc, "z_dims", ""), "z_dims");
    const Index nx = total_dim(xd), ny = total_dim(yd), nz = total_dim(zd);
    LinearMap A(xd, yd, read_matrix(field(doc, "A", ""), "A", ny, nx));
    LinearMap B(xd, zd, read_matrix(field(doc, "B", ""), "B", nz, nx));
    BlockVector c = read_vector(field(doc, "c", ""), "c", xd);
    ConvexFunction f = read_function(field(doc, "f", ""), "f", yd);
    ConvexFunction g = read_function(field(doc, "g", ""), "g", zd);
    LoadedProblem out{ProblemInstance(std::move(f), std::move(g), std::move(A), std::move(B), std::move(c)),
                      std::nullopt};
    if (auto it = doc.find("known_solution"); it != doc.end()) {
      out.solution = KnownSolution{read_vector(field(*it, "y", "known_solution"), "known_solution.y", yd),
                                   read_vector(field(*it, "z", "known_solution"), "known_solution.z", zd),
                                   read_vector(field(*it, "x", "known_solution"), "known_solution.x", xd)};
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid instance document: ") + e.what());
  }
}

void save_instance(const std::string& path, const ProblemInstance& inst,
                   const std::optional<KnownSolution>& sol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << serialize_instance(inst, sol);
  if (!out) throw Error("write to '" + path + "' failed");
}

LoadedProblem load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

}  // namespace spgadmm
