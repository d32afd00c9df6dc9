#pragma once

// Plain-text program corpus. Each *.sigma file holds one closed program plus
// expectation directives embedded as comment lines:
//
//   //!expect: mode split
//   //!expect: type Top -> Top
//   //!expect: ill-typed Inv
//   //!expect: rejected-in variance
//   //!expect: outcome value
//   //!expect: fuel 80
//   //!expect: steps 5
//   //!expect: stuck-reason missing-method
//   //!expect: final {m = l0}
//
// The lexer already treats // lines as comments, so the whole file goes to the
// parser unmodified; the runner scans the raw text for directives separately.
//
// Defaults when a directive is absent: mode variance, fuel 500, and any file
// that typechecks must not get stuck when run. "type" compares the synthesized
// type against the directive's type after normalization for the file's mode.
// "ill-typed" optionally carries a substring the type error must mention.
// "rejected-in" asserts the program fails to check in the named mode (used by
// programs that exercise the gap between the two subtype readings). "final"
// compares the terminal term up to alpha equivalence; location names in the
// directive refer to the canonical allocator's numbering.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigma/ast.hpp"
#include "sigma/binding.hpp"
#include "sigma/eval.hpp"
#include "sigma/parser.hpp"
#include "sigma/printer.hpp"
#include "sigma/typecheck.hpp"

namespace sigma {

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Expectation {
  Mode mode = Mode::Variance;
  std::optional<std::string> type_src;
  bool ill_typed = false;
  std::string error_needle;  // optional substring of the type error message
  std::optional<Mode> rejected_in;
  std::optional<Outcome> outcome;
  std::optional<size_t> steps;
  std::optional<std::string> stuck_reason;
  std::optional<std::string> final_src;
  size_t fuel = 500;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline Mode parse_mode_word(const std::string& w, const std::string& where) {
  if (w == "variance") return Mode::Variance;
  if (w == "split") return Mode::Split;
  throw CorpusError(where + ": unknown mode '" + w + "'");
}

}  // namespace detail

inline Expectation parse_expectations(const std::string& text,
                                      const std::string& name = "<corpus>") {
  static const std::string marker = "//!expect:";
  Expectation ex;
  std::istringstream lines(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.rfind(marker, 0) != 0) continue;
    std::string body = detail::trim(t.substr(marker.size()));
    std::string where = name + ":" + std::to_string(lineno);
    size_t sp = body.find_first_of(" \t");
    std::string key = sp == std::string::npos ? body : body.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : detail::trim(body.substr(sp));
    if (key == "mode") {
      ex.mode = detail::parse_mode_word(rest, where);
    } else if (key == "type") {
      if (rest.empty()) throw CorpusError(where + ": 'type' needs a type");
      ex.type_src = rest;
    } else if (key == "ill-typed") {
      ex.ill_typed = true;
      ex.error_needle = rest;
    } else if (key == "rejected-in") {
      ex.rejected_in = detail::parse_mode_word(rest, where);
    } else if (key == "outcome") {
      if (rest == "value") ex.outcome = Outcome::Value;
      else if (rest == "stuck") ex.outcome = Outcome::Stuck;
      else if (rest == "fuel-exhausted") ex.outcome = Outcome::FuelExhausted;
      else throw CorpusError(where + ": unknown outcome '" + rest + "'");
    } else if (key == "fuel") {
      ex.fuel = static_cast<size_t>(std::stoull(rest));
      if (ex.fuel == 0) throw CorpusError(where + ": fuel must be positive");
    } else if (key == "steps") {
      ex.steps = static_cast<size_t>(std::stoull(rest));
    } else if (key == "stuck-reason") {
      if (rest.empty()) throw CorpusError(where + ": 'stuck-reason' needs a name");
      ex.stuck_reason = rest;
    } else if (key == "final") {
      if (rest.empty()) throw CorpusError(where + ": 'final' needs a term");
      ex.final_src = rest;
    } else {
      throw CorpusError(where + ": unknown directive '" + key + "'");
    }
  }
  return ex;
}

struct FileReport {
  std::string name;  // file stem, e.g. "counter"
  std::string path;
  Expectation expect;
  TermPtr term;  // null when parsing failed
  TypePtr type;  // synthesized type when the file checks in its mode
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

struct CorpusReport {
  std::vector<FileReport> files;

  size_t passed() const {
    return static_cast<size_t>(
        std::count_if(files.begin(), files.end(), [](const FileReport& f) { return f.ok(); }));
  }
  size_t failed() const { return files.size() - passed(); }
  bool all_ok() const { return failed() == 0; }
};

inline FileReport run_corpus_source(const std::string& text, const std::string& name) {
  FileReport rep;
  rep.name = name;
  rep.expect = parse_expectations(text, name);
  const Expectation& ex = rep.expect;

  auto fail = [&rep](std::string msg) { rep.failures.push_back(std::move(msg)); };

  try {
    rep.term = parse_term(text);
  } catch (const ParseError& e) {
    fail(std::string("parse error: ") + e.what());
    return rep;
  }

  CheckOptions opts;
  opts.mode = ex.mode;
  bool well_typed = false;
  try {
    rep.type = type_of(rep.term, opts);
    well_typed = true;
    if (ex.ill_typed) {
      fail("expected a type error, but the program checks at " + print_type(rep.type));
    } else if (ex.type_src) {
      TypePtr want;
      try {
        want = norm_type(parse_type(*ex.type_src), ex.mode);
      } catch (const ParseError& e) {
        fail(std::string("bad 'type' directive: ") + e.what());
      }
      if (want && !alpha_eq_type(rep.type, want)) {
        fail("type mismatch: synthesized " + print_type(rep.type) + ", expected " +
             print_type(want));
      }
    }
  } catch (const TypeError& e) {
    if (!ex.ill_typed) {
      fail(std::string("unexpected type error: ") + e.what());
    } else if (!ex.error_needle.empty() &&
               std::string(e.what()).find(ex.error_needle) == std::string::npos) {
      fail("type error does not mention '" + ex.error_needle + "': " + e.what());
    }
  }

  if (ex.rejected_in) {
    CheckOptions other;
    other.mode = *ex.rejected_in;
    try {
      TypePtr t = type_of(rep.term, other);
      fail(std::string("expected rejection in ") +
           (*ex.rejected_in == Mode::Split ? "split" : "variance") + " mode, but it checks at " +
           print_type(t));
    } catch (const TypeError&) {
      // rejected, as required
    }
  }

  // Run the program unless it is ill-typed by design and carries no explicit
  // runtime expectation; well-typed corpus programs must never get stuck.
  bool should_run = ex.outcome || ex.steps || ex.final_src || ex.stuck_reason || well_typed;
  if (!should_run) return rep;

  Trace tr = run(Config{Heap{}, rep.term}, ex.fuel);
  if (ex.outcome) {
    if (tr.outcome != *ex.outcome)
      fail(std::string("outcome mismatch: got ") + to_string(tr.outcome) + ", expected " +
           to_string(*ex.outcome));
  } else if (well_typed && tr.outcome == Outcome::Stuck) {
    fail(std::string("well-typed program got stuck: ") +
         (tr.stuck_reason ? to_string(*tr.stuck_reason) : "?"));
  }
  if (ex.steps && tr.steps() != *ex.steps) {
    fail("step count mismatch: got " + std::to_string(tr.steps()) + ", expected " +
         std::to_string(*ex.steps));
  }
  if (ex.stuck_reason) {
    std::string got = tr.stuck_reason ? to_string(*tr.stuck_reason) : "(none)";
    if (got != *ex.stuck_reason)
      fail("stuck reason mismatch: got " + got + ", expected " + *ex.stuck_reason);
  }
  if (ex.final_src) {
    TermPtr want;
    try {
      want = parse_term(*ex.final_src);
    } catch (const ParseError& e) {
      fail(std::string("bad 'final' directive: ") + e.what());
    }
    if (want && !alpha_eq_term(tr.final_config().term, want)) {
      fail("final term mismatch: got " + print_term(tr.final_config().term) + ", expected " +
           print_term(want));
    }
  }
  return rep;
}

inline FileReport run_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  FileReport rep = run_corpus_source(buf.str(), path.stem().string());
  rep.path = path.string();
  return rep;
}

inline CorpusReport run_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw CorpusError("corpus directory not found: " + dir.string());
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".sigma")
      paths.push_back(entry.path());
  if (paths.empty()) throw CorpusError("no .sigma files in " + dir.string());
  std::sort(paths.begin(), paths.end());
  CorpusReport rep;
  rep.files.reserve(paths.size());
  for (const auto& p : paths) rep.files.push_back(run_corpus_file(p));
  return rep;
}

}  // namespace sigma
