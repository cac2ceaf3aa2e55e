#include "gpobs/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "gpobs/error.hpp"
#include "gpobs/format.hpp"

namespace gpobs {

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    ++number;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < raw.size() && raw[j] != ' ' && raw[j] != '\t' && raw[j] != '\r') ++j;
      if (j > i) line.tokens.emplace_back(raw.substr(i, j - i));
      i = j;
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return lines;
}

class Parser {
 public:
  Parser(std::string_view text, std::string_view source) : lines_(tokenize(text)), source_(source) {}

  bool done() const { return pos_ >= lines_.size(); }
  const Line& peek() const { return lines_[pos_]; }
  const Line& next() { return lines_[pos_++]; }

  [[noreturn]] void fail(const Line& line, const std::string& msg) const {
    throw Error(ErrorCode::parse_error, std::string(source_) + ":" + std::to_string(line.number) + ": " + msg);
  }

  double number(const Line& line, std::size_t idx) const {
    if (idx >= line.tokens.size()) fail(line, "missing value for '" + line.tokens[0] + "'");
    try {
      return parse_double(line.tokens[idx]);
    } catch (const Error& e) {
      fail(line, std::string(e.what()) + " in field '" + line.tokens[0] + "'");
    }
  }

  std::uint64_t integer(const Line& line, std::size_t idx) const {
    if (idx >= line.tokens.size()) fail(line, "missing integer for '" + line.tokens[0] + "'");
    const std::string& t = line.tokens[idx];
    std::uint64_t value = 0;
    auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || end != t.data() + t.size()) {
      fail(line, "expected a non-negative integer in field '" + line.tokens[0] + "', got '" + t + "'");
    }
    return value;
  }

  void expect_arity(const Line& line, std::size_t n) const {
    if (line.tokens.size() != n) {
      fail(line, "'" + line.tokens[0] + "' expects " + std::to_string(n - 1) + " argument(s)");
    }
  }

  // `matrix NAME r c` (or `coupling J r c`) header already consumed; reads r rows.
  Matrix matrix_body(const Line& header, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) fail(header, "matrix dimensions must be positive");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (done()) fail(header, "matrix truncated: expected " + std::to_string(rows) + " rows");
      const Line& row = next();
      if (row.tokens.size() != cols) {
        fail(row, "matrix row has " + std::to_string(row.tokens.size()) + " entries, expected " + std::to_string(cols));
      }
      for (std::size_t c = 0; c < cols; ++c) {
        try {
          m(r, c) = parse_double(row.tokens[c]);
        } catch (const Error& e) {
          fail(row, e.what());
        }
      }
    }
    return m;
  }

  Vector vector_values(const Line& line) const {
    if (line.tokens.size() < 3) fail(line, "vector '" + (line.tokens.size() > 1 ? line.tokens[1] : std::string()) + "' has no values");
    Vector v;
    for (std::size_t i = 2; i < line.tokens.size(); ++i) v.push_back(number(line, i));
    return v;
  }

  std::string_view source() const { return source_; }

 private:
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
  std::string_view source_;
};

bool assign_vector(const std::string& key, const Vector& value, Vector& x0_lo, Vector& x0_hi, Vector& w_lo,
                   Vector& w_hi, Vector& v_lo, Vector& v_hi) {
  if (key == "x0_lo") x0_lo = value;
  else if (key == "x0_hi") x0_hi = value;
  else if (key == "w_lo") w_lo = value;
  else if (key == "w_hi") w_hi = value;
  else if (key == "v_lo") v_lo = value;
  else if (key == "v_hi") v_hi = value;
  else return false;
  return true;
}

AgentBlock parse_agent(Parser& p, const Line& header, std::size_t index) {
  AgentBlock ag;
  bool closed = false;
  while (!p.done()) {
    const Line& line = p.next();
    const std::string& key = line.tokens[0];
    if (key == "end") {
      closed = true;
      break;
    }
    if (key == "matrix") {
      p.expect_arity(line, 4);
      const std::string& name = line.tokens[1];
      Matrix m = p.matrix_body(line, p.integer(line, 2), p.integer(line, 3));
      if (name == "A") ag.a = std::move(m);
      else if (name == "W") ag.w = std::move(m);
      else if (name == "C") ag.c = std::move(m);
      else if (name == "V") ag.v = std::move(m);
      else p.fail(line, "unknown agent matrix '" + name + "'");
    } else if (key == "coupling") {
      p.expect_arity(line, 4);
      const std::uint64_t j = p.integer(line, 1);
      if (j == 0) p.fail(line, "agent indices are 1-based");
      Matrix m = p.matrix_body(line, p.integer(line, 2), p.integer(line, 3));
      if (!ag.couplings.emplace(j - 1, std::move(m)).second) p.fail(line, "duplicate coupling to agent " + std::to_string(j));
    } else if (key == "vector") {
      if (line.tokens.size() < 2) p.fail(line, "vector needs a name");
      if (!assign_vector(line.tokens[1], p.vector_values(line), ag.x0_lo, ag.x0_hi, ag.w_lo, ag.w_hi, ag.v_lo, ag.v_hi)) {
        p.fail(line, "unknown agent vector '" + line.tokens[1] + "'");
      }
    } else {
      p.fail(line, "unknown key '" + key + "' in agent section");
    }
  }
  if (!closed) p.fail(header, "agent section is not closed with 'end'");
  const std::string who = "agent " + std::to_string(index + 1);
  if (ag.a.empty()) p.fail(header, who + ": matrix A required");
  if (ag.c.empty()) p.fail(header, who + ": matrix C required");
  if (ag.w.empty()) p.fail(header, who + ": matrix W required");
  if (ag.v.empty()) p.fail(header, who + ": matrix V required");
  return ag;
}

PlantModel parse_global_plant(Parser& p, const Line& header) {
  PlantModel pm;
  std::vector<std::size_t> state_parts, output_parts;
  bool closed = false;
  while (!p.done()) {
    const Line& line = p.next();
    const std::string& key = line.tokens[0];
    if (key == "end") {
      closed = true;
      break;
    }
    if (key == "matrix") {
      p.expect_arity(line, 4);
      const std::string& name = line.tokens[1];
      Matrix m = p.matrix_body(line, p.integer(line, 2), p.integer(line, 3));
      if (name == "A") pm.a = std::move(m);
      else if (name == "W") pm.w = std::move(m);
      else if (name == "C") pm.c = std::move(m);
      else if (name == "V") pm.v = std::move(m);
      else p.fail(line, "unknown plant matrix '" + name + "'");
    } else if (key == "vector") {
      if (line.tokens.size() < 2) p.fail(line, "vector needs a name");
      if (!assign_vector(line.tokens[1], p.vector_values(line), pm.x0.lo, pm.x0.hi, pm.w_bounds.lo, pm.w_bounds.hi,
                         pm.v_bounds.lo, pm.v_bounds.hi)) {
        p.fail(line, "unknown plant vector '" + line.tokens[1] + "'");
      }
    } else if (key == "partition_states" || key == "partition_outputs") {
      auto& parts = key == "partition_states" ? state_parts : output_parts;
      for (std::size_t i = 1; i < line.tokens.size(); ++i) parts.push_back(p.integer(line, i));
    } else {
      p.fail(line, "unknown key '" + key + "' in plant section");
    }
  }
  if (!closed) p.fail(header, "plant section is not closed with 'end'");
  for (const char* name : {"A", "C", "W", "V"}) {
    const Matrix& m = name[0] == 'A' ? pm.a : name[0] == 'C' ? pm.c : name[0] == 'W' ? pm.w : pm.v;
    if (m.empty()) p.fail(header, std::string("plant: matrix ") + name + " required");
  }
  if (state_parts.empty()) state_parts = {pm.a.rows()};
  if (output_parts.empty()) output_parts = {pm.c.rows()};
  if (state_parts.size() != output_parts.size()) p.fail(header, "plant: state and output partitions differ in agent count");
  pm.state_offsets = {0};
  pm.output_offsets = {0};
  for (std::size_t i = 0; i < state_parts.size(); ++i) {
    pm.state_offsets.push_back(pm.state_offsets.back() + state_parts[i]);
    pm.output_offsets.push_back(pm.output_offsets.back() + output_parts[i]);
  }
  if (pm.state_offsets.back() != pm.a.rows() || pm.output_offsets.back() != pm.c.rows()) {
    p.fail(header, "plant: partitions do not sum to the state/output dimensions");
  }
  return pm;
}

void write_matrix(std::ostringstream& out, const std::string& header, const Matrix& m, const char* indent = "") {
  out << indent << header << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << indent << ' ';
    for (std::size_t j = 0; j < m.cols(); ++j) out << ' ' << format_double(m(i, j));
    out << '\n';
  }
}

void write_vector(std::ostringstream& out, const std::string& name, const Vector& v, const char* indent = "") {
  out << indent << "vector " << name;
  for (double x : v) out << ' ' << format_double(x);
  out << '\n';
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario parse_scenario(std::string_view text, std::string_view source) {
  Parser p(text, source);
  Scenario sc;
  std::vector<AgentBlock> agents;
  std::optional<PlantModel> global;
  std::optional<Matrix> gamma;
  std::optional<Matrix> gain;
  std::optional<double> alpha, epsilon, delta, rho;

  while (!p.done()) {
    const Line& line = p.next();
    const std::string& key = line.tokens[0];
    if (key == "format") {
      p.expect_arity(line, 3);
      if (line.tokens[1] != "gpobs-scenario" || line.tokens[2] != "1") p.fail(line, "unsupported format '" + line.tokens[1] + " " + line.tokens[2] + "'");
    } else if (key == "name") {
      p.expect_arity(line, 2);
      sc.name = line.tokens[1];
    } else if (key == "agent") {
      if (global) p.fail(line, "cannot mix 'agent' sections with a 'plant' section");
      const Line header = line;
      agents.push_back(parse_agent(p, header, agents.size()));
    } else if (key == "plant") {
      if (!agents.empty() || global) p.fail(line, "only one plant description is allowed");
      const Line header = line;
      global = parse_global_plant(p, header);
    } else if (key == "matrix") {
      p.expect_arity(line, 4);
      const std::string& name = line.tokens[1];
      Matrix m = p.matrix_body(line, p.integer(line, 2), p.integer(line, 3));
      if (name == "Gamma") gamma = std::move(m);
      else if (name == "gain") gain = std::move(m);
      else if (name == "mask") sc.mask = std::move(m);
      else p.fail(line, "unknown top-level matrix '" + name + "'");
    } else if (key == "alpha") {
      p.expect_arity(line, 2);
      alpha = p.number(line, 1);
    } else if (key == "epsilon") {
      p.expect_arity(line, 2);
      epsilon = p.number(line, 1);
    } else if (key == "delta") {
      p.expect_arity(line, 2);
      delta = p.number(line, 1);
    } else if (key == "rho") {
      p.expect_arity(line, 2);
      rho = p.number(line, 1);
    } else if (key == "horizon") {
      p.expect_arity(line, 2);
      sc.run.horizon = p.integer(line, 1);
      sc.run.horizon_defaulted = false;
      if (sc.run.horizon == 0) p.fail(line, "horizon must be at least 1");
    } else if (key == "seed") {
      p.expect_arity(line, 2);
      sc.run.seed = p.integer(line, 1);
      sc.run.seed_defaulted = false;
    } else if (key == "dp_scale") {
      p.expect_arity(line, 2);
      sc.dp_scale = p.number(line, 1);
      if (*sc.dp_scale < 0.0) p.fail(line, "dp_scale must be non-negative");
    } else {
      p.fail(line, "unknown key '" + key + "'");
    }
  }

  const std::string src(source);
  if (!gamma) throw Error(ErrorCode::parse_error, src + ": Gamma required");
  if (agents.empty() && !global) throw Error(ErrorCode::parse_error, src + ": no plant description (expected 'agent' or 'plant' sections)");

  try {
    if (global) {
      sc.plant = std::move(*global);
      sc.plant.gamma = *gamma;
      sc.plant.validate();
    } else {
      sc.plant = assemble_global(agents, *gamma);
    }
  } catch (const Error& e) {
    throw Error(e.code(), src + ": " + e.what());
  }

  if (epsilon || delta || rho) {
    if (!epsilon || !delta || !rho) throw Error(ErrorCode::parse_error, src + ": budget requires all of epsilon, delta, rho");
    try {
      sc.budget = PrivacyBudget(*epsilon, *delta, *rho);
    } catch (const Error& e) {
      throw Error(e.code(), src + ": budget: " + e.what());
    }
  }
  if (gain) {
    if (gain->rows() != sc.plant.n() || gain->cols() != sc.plant.m()) {
      throw Error(ErrorCode::dimension_mismatch, src + ": gain must be " + std::to_string(sc.plant.n()) + "x" + std::to_string(sc.plant.m()));
    }
    sc.fixture = GainBlock{*gain, alpha.value_or(1.0)};
  }
  if (alpha && !(*alpha > 0.0)) throw Error(ErrorCode::invalid_argument, src + ": alpha must be positive");
  if (sc.mask && (sc.mask->rows() != sc.plant.n() || sc.mask->cols() != sc.plant.m())) {
    throw Error(ErrorCode::dimension_mismatch, src + ": mask must be " + std::to_string(sc.plant.n()) + "x" + std::to_string(sc.plant.m()));
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  return parse_scenario(text, path.string());
}

std::string serialize_scenario(const Scenario& sc) {
  std::ostringstream out;
  const PlantModel& p = sc.plant;
  out << "format gpobs-scenario 1\n";
  if (!sc.name.empty()) out << "name " << sc.name << '\n';
  out << "plant\n";
  write_matrix(out, "matrix A", p.a, "  ");
  write_matrix(out, "matrix C", p.c, "  ");
  write_matrix(out, "matrix W", p.w, "  ");
  write_matrix(out, "matrix V", p.v, "  ");
  write_vector(out, "x0_lo", p.x0.lo, "  ");
  write_vector(out, "x0_hi", p.x0.hi, "  ");
  write_vector(out, "w_lo", p.w_bounds.lo, "  ");
  write_vector(out, "w_hi", p.w_bounds.hi, "  ");
  write_vector(out, "v_lo", p.v_bounds.lo, "  ");
  write_vector(out, "v_hi", p.v_bounds.hi, "  ");
  out << "  partition_states";
  for (std::size_t i = 0; i + 1 < p.state_offsets.size(); ++i) out << ' ' << p.state_offsets[i + 1] - p.state_offsets[i];
  out << "\n  partition_outputs";
  for (std::size_t i = 0; i + 1 < p.output_offsets.size(); ++i) out << ' ' << p.output_offsets[i + 1] - p.output_offsets[i];
  out << "\nend\n";
  write_matrix(out, "matrix Gamma", p.gamma);
  if (sc.budget) {
    out << "epsilon " << format_double(sc.budget->epsilon) << '\n';
    out << "delta " << format_double(sc.budget->delta) << '\n';
    out << "rho " << format_double(sc.budget->rho) << '\n';
  }
  if (sc.fixture) {
    write_matrix(out, "matrix gain", sc.fixture->gain);
    out << "alpha " << format_double(sc.fixture->alpha) << '\n';
  }
  if (sc.mask) write_matrix(out, "matrix mask", *sc.mask);
  if (sc.dp_scale) out << "dp_scale " << format_double(*sc.dp_scale) << '\n';
  out << "horizon " << sc.run.horizon << '\n';
  out << "seed " << sc.run.seed << '\n';
  return out.str();
}

GainBlock parse_design(std::string_view text, std::string_view source) {
  Parser p(text, source);
  std::optional<Matrix> gain;
  double alpha = 1.0;
  while (!p.done()) {
    const Line& line = p.next();
    const std::string& key = line.tokens[0];
    if (key == "format") {
      p.expect_arity(line, 3);
      if (line.tokens[1] != "gpobs-design" || line.tokens[2] != "1") p.fail(line, "unsupported design format");
    } else if (key == "matrix") {
      p.expect_arity(line, 4);
      if (line.tokens[1] != "gain") p.fail(line, "design files hold only the 'gain' matrix");
      gain = p.matrix_body(line, p.integer(line, 2), p.integer(line, 3));
    } else if (key == "alpha") {
      p.expect_arity(line, 2);
      alpha = p.number(line, 1);
      if (!(alpha > 0.0)) p.fail(line, "alpha must be positive");
    } else {
      p.fail(line, "unknown key '" + key + "' in design file");
    }
  }
  if (!gain) throw Error(ErrorCode::parse_error, std::string(source) + ": gain required");
  return GainBlock{std::move(*gain), alpha};
}

GainBlock load_design(const std::filesystem::path& path) {
  return parse_design(read_text_file(path), path.string());
}

std::string serialize_design(const GainBlock& design) {
  std::ostringstream out;
  out << "format gpobs-design 1\n";
  write_matrix(out, "matrix gain", design.gain);
  out << "alpha " << format_double(design.alpha) << '\n';
  return out.str();
}

}  // namespace gpobs
