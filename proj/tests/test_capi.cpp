#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <string>
#include <vector>

#include "json.hpp"
#include "rfexplain/rfexplain.h"
#include "support/support.hpp"

using nlohmann::json;
using rfx::testing::fixture_path;
using rfx::testing::read_file;

namespace {

struct Handle {
  rfx_forest* f = nullptr;
  explicit Handle(const std::string& doc) {
    REQUIRE(rfx_forest_parse(doc.data(), doc.size(), &f) == RFX_OK);
  }
  ~Handle() { rfx_forest_free(f); }
};

std::string take(char* s) {
  std::string out(s);
  rfx_free_string(s);
  return out;
}

std::string med_doc() { return read_file(fixture_path("f_med.json")); }

}  // namespace

TEST_CASE("version and hashing") {
  CHECK(std::string(rfx_version()) == "0.1.0");
  char hex[65];
  REQUIRE(rfx_sha256_hex("abc", 3, hex) == RFX_OK);
  CHECK(std::string(hex) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  uint64_t m = 0;
  CHECK(rfx_chernoff_sample_size(0.5, 0.1, 0.05, &m) == RFX_OK);
  CHECK(m == 2214);
  CHECK(rfx_chernoff_sample_size(0.0, 0.1, 0.05, &m) == RFX_E_INVALID_ARGUMENT);
  CHECK(std::string(rfx_last_error()).find("p_lower") != std::string::npos);
}

TEST_CASE("parse errors and null arguments") {
  rfx_forest* f = nullptr;
  const char* bad = "{\"features\":[]}";
  CHECK(rfx_forest_parse(bad, std::strlen(bad), &f) == RFX_E_PARSE);
  CHECK(f == nullptr);
  CHECK(std::string(rfx_last_error()).size() > 0);
  CHECK(rfx_forest_parse(nullptr, 0, &f) == RFX_E_INVALID_ARGUMENT);
  std::string doc = med_doc();
  CHECK(rfx_forest_parse(doc.data(), doc.size(), nullptr) == RFX_E_INVALID_ARGUMENT);
  rfx_forest_free(nullptr);
}

TEST_CASE("classify through the C surface") {
  Handle h(med_doc());
  int64_t out = 0;
  const char* pos[] = {"1", "1", "0", "25"};
  REQUIRE(rfx_classify(h.f, pos, 4, &out) == RFX_OK);
  CHECK(out == 0);
  const char* tie[] = {"1", "0", "0", "25"};
  REQUIRE(rfx_classify(h.f, tie, 4, &out) == RFX_OK);
  CHECK(out == -1);
  CHECK(rfx_classify(h.f, tie, 3, &out) == RFX_E_INVALID_ARGUMENT);
}

TEST_CASE("serialize round-trips through a new handle") {
  Handle h(med_doc());
  char* s = nullptr;
  REQUIRE(rfx_forest_serialize(h.f, &s) == RFX_OK);
  std::string doc = take(s);
  Handle again(doc);
  char* s2 = nullptr;
  REQUIRE(rfx_forest_serialize(again.f, &s2) == RFX_OK);
  CHECK(take(s2) == doc);
}

TEST_CASE("inspect") {
  Handle h(med_doc());
  char* s = nullptr;
  REQUIRE(rfx_inspect(h.f, RFX_FORMAT_JSON, &s) == RFX_OK);
  json j = json::parse(take(s));
  CHECK(j["equivalence_classes"] == 8);
  CHECK(j["collapsed_multiplicity"] == 2);
  CHECK(j["rules"] == 6);
  CHECK(j["bag"]["arguments"] == 15);
  CHECK(j["bag"]["attacks"] == 22);
  CHECK(j["bag"]["supports"] == 6);
  CHECK(j["features"][2]["used"] == false);
  REQUIRE(rfx_bag_export(h.f, &s) == RFX_OK);
  CHECK(take(s).rfind("arg 0 class Pos\n", 0) == 0);
}

TEST_CASE("exact") {
  Handle h(med_doc());
  rfx_exact_options o;
  rfx_exact_options_init(&o);
  const char* qs[] = {"C=Pos|B=1,Age<=35", "A=0|C=Neg", "C=Pos|A=1,B=0"};
  o.queries = qs;
  o.query_count = 3;
  char* s = nullptr;
  REQUIRE(rfx_exact(h.f, &o, RFX_FORMAT_JSON, &s) == RFX_OK);
  json j = json::parse(take(s));
  CHECK(j["z"] == 4);
  CHECK(j["ambiguity"] == 0.5);
  CHECK(j["queries"][0]["p"] == 1.0);
  CHECK(j["queries"][1]["numerator"] == 2);
  CHECK(j["queries"][2]["p"].is_null());
  CHECK(j["necessary"][1]["conditions"].size() == 2);

  o.max_exact_classes = 4;
  CHECK(rfx_exact(h.f, &o, RFX_FORMAT_JSON, &s) == RFX_E_CAP_EXCEEDED);
  o.max_exact_classes = 1 << 20;
  const char* bad[] = {"C=Maybe"};
  o.queries = bad;
  o.query_count = 1;
  CHECK(rfx_exact(h.f, &o, RFX_FORMAT_JSON, &s) == RFX_E_INVALID_ARGUMENT);
}

TEST_CASE("sample is deterministic and reports stage 1") {
  Handle h(med_doc());
  rfx_sample_options o;
  rfx_sample_options_init(&o);
  o.seed = 7;
  o.max_iterations = 50000;
  o.early_stop = 0;
  int calls = 0;
  o.progress = [](uint64_t, uint64_t, void* user) { ++*static_cast<int*>(user); };
  o.progress_user = &calls;
  char* s = nullptr;
  REQUIRE(rfx_sample(h.f, &o, RFX_FORMAT_JSON, &s) == RFX_OK);
  std::string first = take(s);
  CHECK(calls > 0);
  json j = json::parse(first);
  CHECK(j["iterations"] == 50000);
  double v = j["nonambiguous"]["value"];
  CHECK(v >= 0.48);
  CHECK(v <= 0.52);
  o.workers = 4;
  REQUIRE(rfx_sample(h.f, &o, RFX_FORMAT_JSON, &s) == RFX_OK);
  CHECK(take(s) == first);
  o.max_iterations = 0;
  CHECK(rfx_sample(h.f, &o, RFX_FORMAT_JSON, &s) == RFX_E_INVALID_ARGUMENT);
}

TEST_CASE("mine streams records") {
  Handle h(med_doc());
  rfx_sample_options o;
  rfx_sample_options_init(&o);
  o.seed = 1;
  o.keep_redundant = 1;
  std::vector<std::string> records;
  char* summary = nullptr;
  auto sink = [](const char* rec, void* user) {
    static_cast<std::vector<std::string>*>(user)->push_back(rec);
  };
  REQUIRE(rfx_mine(h.f, &o, RFX_FORMAT_JSON, sink, &records, &summary) == RFX_OK);
  json sum = json::parse(take(summary));
  CHECK(sum["stage2"]["reported"] == records.size());
  CHECK(records.size() == 8);
  for (const auto& r : records) CHECK(json::parse(r)["kind"] == "sufficient");

  o.minimize = 1;
  o.reason = "C=Pos|A=1,B=1,Age<=35";
  records.clear();
  REQUIRE(rfx_mine(h.f, &o, RFX_FORMAT_JSON, sink, &records, &summary) == RFX_OK);
  rfx_free_string(summary);
  REQUIRE(records.size() == 1);
  json r = json::parse(records[0]);
  CHECK(r["conditions"].size() == 2);
  CHECK(r["conditions"][0]["feature"] == "B");
  CHECK(r["conditions"][1]["set"] == "(-inf, 35]");
  CHECK(r["flags"] == json::array({"minimal"}));
}

TEST_CASE("DIMACS to forest") {
  const char* text = "p cnf 3 1\n1 2 3 0\n";
  rfx_forest* f = nullptr;
  char* notes = nullptr;
  REQUIRE(rfx_forest_from_dimacs(text, std::strlen(text), &f, &notes) == RFX_OK);
  json n = json::parse(take(notes));
  CHECK(n["trees"] == 2);
  CHECK(n["max_leaves"] == 4);
  rfx_exact_options o;
  rfx_exact_options_init(&o);
  char* s = nullptr;
  REQUIRE(rfx_exact(f, &o, RFX_FORMAT_JSON, &s) == RFX_OK);
  CHECK(json::parse(take(s))["ambiguity"] == 0.875);
  rfx_forest_free(f);
  const char* bad = "p cnf 3 1\n1 2 3\n";
  CHECK(rfx_forest_from_dimacs(bad, std::strlen(bad), &f, &notes) == RFX_E_PARSE);
}
