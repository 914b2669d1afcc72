#include "hjr/state_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "hjr/error.hpp"

namespace hjr {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string serialize_state(const RiccatiState& state) {
  const Eigen::Index n = state.dim();
  std::string out;
  out += std::string(kStateMagic) + " " + std::to_string(kStateVersion) + "\n";
  out += "n " + std::to_string(n) + "\n";
  out += "epsilon " + format_double(state.epsilon) + "\n";
  out += std::string("track_r ") + (state.track_r ? "1" : "0") + "\n";
  out += "P\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j) out += ' ';
      out += format_double(state.P(i, j));
    }
    out += '\n';
  }
  out += "q\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += format_double(state.q(i));
  }
  out += "\nr\n" + format_double(state.r) + "\n";
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : in_(std::string(text)) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of file");
    return w;
  }

  void expect(std::string_view token) {
    const std::string w = word();
    if (w != token) fail("expected '" + std::string(token) + "', found '" + w + "'");
  }

  double number() {
    const std::string w = word();
    double v = 0.0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size()) fail("bad number '" + w + "'");
    return v;
  }

  long long integer() {
    const std::string w = word();
    long long v = 0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size()) fail("bad integer '" + w + "'");
    return v;
  }

  void expect_end() {
    std::string extra;
    if (in_ >> extra) fail("trailing content '" + extra + "'");
  }

  [[noreturn]] static void fail(const std::string& why) {
    throw Error(ErrorCode::Io, "parse_state", "malformed state file: " + why);
  }

 private:
  std::istringstream in_;
};

}  // namespace

RiccatiState parse_state(std::string_view text) {
  Reader rd(text);
  rd.expect(kStateMagic);
  if (rd.integer() != kStateVersion) Reader::fail("unsupported version");
  rd.expect("n");
  const long long n = rd.integer();
  if (n <= 0 || n > 100000) Reader::fail("dimension out of range");
  rd.expect("epsilon");
  RiccatiState s;
  s.epsilon = rd.number();
  if (!(s.epsilon > 0.0)) Reader::fail("epsilon must be positive");
  rd.expect("track_r");
  const long long tr = rd.integer();
  if (tr != 0 && tr != 1) Reader::fail("track_r must be 0 or 1");
  s.track_r = tr == 1;
  s.P.resize(n, n);
  s.q.resize(n);
  rd.expect("P");
  for (long long i = 0; i < n; ++i) {
    for (long long j = 0; j < n; ++j) s.P(i, j) = rd.number();
  }
  rd.expect("q");
  for (long long i = 0; i < n; ++i) s.q(i) = rd.number();
  rd.expect("r");
  s.r = rd.number();
  rd.expect_end();
  return s;
}

void save_state(const RiccatiState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "save_state", "cannot open " + path.string());
  out << serialize_state(state);
  if (!out) throw Error(ErrorCode::Io, "save_state", "write failed for " + path.string());
}

RiccatiState load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "load_state", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_state(buf.str());
}

}  // namespace hjr
