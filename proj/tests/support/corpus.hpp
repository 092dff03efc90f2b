// SPDX-License-Identifier: Apache-2.0
// Small-domain corpus shared by the equivalence tests.
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fal/program.hpp"
#include "fal/search.hpp"
#include "support/oracle.hpp"

namespace corpus {

struct Entry {
  std::string file;
  fal::Value int_min;
  fal::Value int_max;
  fal::Value max_len;
};

inline const std::vector<Entry>& small_programs() {
  static const std::vector<Entry> entries = {
      {"listing1.fal", 0, 3, 3},    {"listing2.fal", -4, 4, 5},  {"listing3.fal", -4, 4, 6},
      {"listing4.fal", 0, 2, 9},    {"oob.fal", 0, 3, 4},        {"inbounds.fal", 0, 3, 4},
      {"bounds.fal", 0, 3, 4},      {"delayed.fal", 0, 3, 4},    {"initializer.fal", -2, 4, 4},
      {"store.fal", -2, 3, 4},      {"swap.fal", -2, 3, 4},      {"negsize.fal", -3, 4, 5},
      {"count.fal", -2, 2, 4},      {"nested.fal", -2, 3, 4},    {"maxindex.fal", -2, 4, 4},
      {"sort3.fal", 0, 4, 4},       {"less.fal", -1, 2, 4},
  };
  return entries;
}

inline std::string read(const std::string& file) {
  std::ifstream in(std::string(FAL_CORPUS_DIR) + "/" + file);
  if (!in) throw std::runtime_error("cannot open corpus file " + file);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline fal::Program load(const std::string& file) { return fal::parse_program(read(file), file); }

inline fal::SearchConfig config_for(const Entry& e, fal::Strategy s) {
  fal::SearchConfig c;
  c.strategy = s;
  c.int_min = e.int_min;
  c.int_max = e.int_max;
  c.max_len = e.max_len;
  c.check = true;
  return c;
}

inline oracle::Config oracle_config_for(const Entry& e) {
  oracle::Config c;
  c.int_min = e.int_min;
  c.int_max = e.int_max;
  c.max_len = e.max_len;
  return c;
}

}  // namespace corpus
