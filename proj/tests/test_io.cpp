#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "pjml/io.hpp"
#include "pjml/rng.hpp"
#include "pjml/types.hpp"

using namespace pjml;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("pjml_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  parts.push_back(current);
  return parts;
}

bool same_cells(const ResponseMatrix& a, const ResponseMatrix& b) {
  if (a.persons() != b.persons() || a.items() != b.items()) return false;
  if (a.observed() != b.observed()) return false;
  for (std::size_t k = 0; k < a.observed(); ++k) {
    const Cell& ca = a.cells()[k];
    const Cell& cb = b.cells()[k];
    if (ca.person != cb.person || ca.item != cb.item || ca.value != cb.value) return false;
  }
  return true;
}

// Swaps a stream's buffer for the capture's lifetime.
struct CaptureStream {
  std::ostream& stream;
  std::ostringstream buffer;
  std::streambuf* old;
  explicit CaptureStream(std::ostream& s) : stream(s), old(s.rdbuf(buffer.rdbuf())) {}
  ~CaptureStream() { stream.rdbuf(old); }
  std::string text() const { return buffer.str(); }
};

}  // namespace

TEST_CASE("triplet files round-trip with their identifiers") {
  TempDir dir;
  const std::string path = dir.file("data.csv");
  write_file(path,
             "person_id,item_id,response\n"
             "p1,i1,1\n"
             "p2,i2,0\n"
             "p1,i2,1\n");

  ResponseMatrix U = load_triplets(path);
  CHECK(U.persons() == 2);
  CHECK(U.items() == 2);
  REQUIRE(U.observed() == 3);
  CHECK(U.person_labels() == std::vector<std::string>{"p1", "p2"});
  CHECK(U.item_labels() == std::vector<std::string>{"i1", "i2"});
  CHECK(U.cells()[0].person == 0);
  CHECK(U.cells()[0].item == 0);
  CHECK(U.cells()[0].value == 1);
  CHECK(U.cells()[1].person == 0);
  CHECK(U.cells()[1].item == 1);
  CHECK(U.cells()[1].value == 1);
  CHECK(U.cells()[2].person == 1);
  CHECK(U.cells()[2].item == 1);
  CHECK(U.cells()[2].value == 0);

  const std::string saved = dir.file("saved.csv");
  save_triplets(U, saved);
  ResponseMatrix back = load_triplets(saved);
  CHECK(same_cells(U, back));
  CHECK(back.person_labels() == U.person_labels());
  CHECK(back.item_labels() == U.item_labels());

  const std::string saved_again = dir.file("saved2.csv");
  save_triplets(back, saved_again);
  CHECK(read_file(saved) == read_file(saved_again));
}

TEST_CASE("triplet parse failures carry line numbers") {
  TempDir dir;
  const std::string path = dir.file("bad.csv");

  SUBCASE("duplicate cell") {
    write_file(path,
               "person_id,item_id,response\n"
               "a,x,1\n"
               "b,x,0\n"
               "a,x,0\n");
    try {
      load_triplets(path);
      FAIL("duplicate was accepted");
    } catch (const ParseError& e) {
      CHECK(e.line == 4);
      CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
  }

  SUBCASE("bad header") {
    write_file(path, "user,question,answer\na,x,1\n");
    try {
      load_triplets(path);
      FAIL("bad header was accepted");
    } catch (const ParseError& e) {
      CHECK(e.line == 1);
    }
  }

  SUBCASE("response outside zero and one") {
    write_file(path, "person_id,item_id,response\na,x,2\n");
    try {
      load_triplets(path);
      FAIL("bad response was accepted");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
    }
  }

  SUBCASE("wrong field count") {
    write_file(path, "person_id,item_id,response\na,x\n");
    CHECK_THROWS_AS(load_triplets(path), ParseError);
  }

  SUBCASE("no data rows") {
    write_file(path, "person_id,item_id,response\n");
    CHECK_THROWS_AS(load_triplets(path), EmptyDataError);
    write_file(path, "");
    CHECK_THROWS_AS(load_triplets(path), EmptyDataError);
  }

  SUBCASE("missing file") {
    try {
      load_triplets(dir.file("absent.csv"));
      FAIL("missing file was accepted");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::io);
    }
  }
}

TEST_CASE("dense grids load with NA as missing") {
  TempDir dir;
  const std::string path = dir.file("grid.csv");

  SUBCASE("all missing") {
    write_file(path, "NA,NA\nNA,NA\n");
    ResponseMatrix U = load_dense(path);
    CHECK(U.persons() == 2);
    CHECK(U.items() == 2);
    CHECK(U.observed() == 0);
  }

  SUBCASE("mixed cells") {
    write_file(path, "1,NA,0\nNA,1,1\n");
    ResponseMatrix U = load_dense(path);
    CHECK(U.persons() == 2);
    CHECK(U.items() == 3);
    REQUIRE(U.observed() == 4);
    CHECK(U.cells()[0].item == 0);
    CHECK(U.cells()[0].value == 1);
    CHECK(U.cells()[1].item == 2);
    CHECK(U.cells()[1].value == 0);
    CHECK(U.cells()[2].person == 1);
    CHECK(U.cells()[2].item == 1);
    CHECK(U.cells()[3].value == 1);
  }

  SUBCASE("ragged rows are rejected") {
    write_file(path, "1,0\n1,0,1\n");
    try {
      load_dense(path);
      FAIL("ragged row was accepted");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
    }
  }

  SUBCASE("unknown cell text is rejected") {
    write_file(path, "1,2\n");
    CHECK_THROWS_AS(load_dense(path), ParseError);
  }

  SUBCASE("a dense grid equals its triplet transcription") {
    write_file(path, "1,NA\n0,1\n");
    const std::string triplets = dir.file("same.csv");
    write_file(triplets,
               "person_id,item_id,response\n"
               "0,0,1\n"
               "1,0,0\n"
               "1,1,1\n");
    CHECK(same_cells(load_dense(path), load_triplets(triplets)));
  }
}

TEST_CASE("parameter matrices round-trip bitwise") {
  TempDir dir;
  Mat values(3, 2);
  values << 1.0 / 3.0, -2.5e-17,
      3.141592653589793, 1e300,
      5e-324, 42.0;
  const std::vector<std::string> labels{"alice", "bob", "cleo"};

  const std::string path = dir.file("params.csv");
  save_matrix(values, labels, "person_id", path);

  auto [loaded, loaded_labels] = load_matrix(path);
  CHECK(loaded_labels == labels);
  REQUIRE(loaded.rows() == 3);
  REQUIRE(loaded.cols() == 2);
  CHECK((loaded.array() == values.array()).all());

  const std::string again = dir.file("params2.csv");
  save_matrix(loaded, loaded_labels, "person_id", again);
  CHECK(read_file(path) == read_file(again));

  SUBCASE("header names the identifier column") {
    CHECK(read_lines(path)[0] == "person_id,col0,col1");
  }

  SUBCASE("empty labels fall back to row numbers") {
    const std::string bare = dir.file("bare.csv");
    save_matrix(values, {}, "item_id", bare);
    auto [reloaded, bare_labels] = load_matrix(bare);
    CHECK(bare_labels == std::vector<std::string>{"0", "1", "2"});
    CHECK((reloaded.array() == values.array()).all());
  }

  SUBCASE("label count must match") {
    CHECK_THROWS_AS(save_matrix(values, {"only"}, "id", dir.file("x.csv")), DimensionError);
  }

  SUBCASE("malformed matrix files") {
    const std::string bad = dir.file("bad.csv");
    write_file(bad, "id,col0\nrow,1.5,9\n");
    CHECK_THROWS_AS(load_matrix(bad), ParseError);
    write_file(bad, "id,col0\nrow,notanumber\n");
    CHECK_THROWS_AS(load_matrix(bad), ParseError);
    write_file(bad, "");
    CHECK_THROWS_AS(load_matrix(bad), EmptyDataError);
  }
}

TEST_CASE("printed doubles parse back to the same bits") {
  Rng rng(71);
  int trials = 0;
  while (trials < 1000) {
    double v = 0;
    switch (rng.below(5)) {
      case 0: v = rng.uniform(-1, 1); break;
      case 1: v = rng.normal(0, 1e6); break;
      case 2: v = rng.normal(0, 1e-6); break;
      case 3: v = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.below(2000)) - 1000); break;
      case 4: v = static_cast<double>(rng.below(1000000)); break;
    }
    ++trials;
    std::string text = format_double(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }
}

TEST_CASE("file digests reflect content") {
  TempDir dir;
  const std::string a = dir.file("a.bin");
  const std::string b = dir.file("b.bin");

  write_file(a, "identical content\n");
  write_file(b, "identical content\n");
  CHECK(file_digest(a) == file_digest(b));
  CHECK(file_digest(a).size() == 16);

  write_file(b, "identical content!\n");
  CHECK(file_digest(a) != file_digest(b));

  // Fowler-Noll-Vo 1a, restated independently.
  std::string content = "identical content\n";
  std::uint64_t want = 0xcbf29ce484222325ULL;
  for (char ch : content) {
    want ^= static_cast<unsigned char>(ch);
    want *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(want));
  CHECK(file_digest(a) == std::string(hex));

  CHECK_THROWS_AS(file_digest(dir.file("absent.bin")), Error);
}

TEST_CASE("simulate command writes a deterministic dataset") {
  TempDir dir;
  const std::string out_a = dir.file("a");
  const std::string out_b = dir.file("b");

  CaptureStream capture(std::cout);
  REQUIRE(run_cli({"simulate", "--preset", "sparse5d-small", "--seed", "5", "--out", out_a}) == 0);
  REQUIRE(run_cli({"simulate", "--preset", "sparse5d-small", "--seed", "5", "--out", out_b}) == 0);

  for (const char* name : {"triplets.csv", "true_theta.csv", "true_items.csv"}) {
    CHECK(read_file(out_a + "/" + name) == read_file(out_b + "/" + name));
  }

  ResponseMatrix U = load_triplets(out_a + "/triplets.csv");
  CHECK(U.persons() == 80);
  CHECK(U.items() == 20);
  CHECK(U.observed() == 1600);

  auto [theta, person_labels] = load_matrix(out_a + "/true_theta.csv");
  CHECK(theta.rows() == 80);
  CHECK(theta.cols() == 5);
  CHECK(person_labels.front() == "0");

  SUBCASE("a different seed gives different draws") {
    const std::string out_c = dir.file("c");
    REQUIRE(run_cli({"simulate", "--preset", "sparse5d-small", "--seed", "6", "--out", out_c}) ==
            0);
    CHECK(read_file(out_a + "/triplets.csv") != read_file(out_c + "/triplets.csv"));
  }
}

TEST_CASE("fit command writes parameters, trajectory, and manifest") {
  TempDir dir;
  const std::string data = dir.file("train.csv");
  {
    testing::Instance inst = testing::random_instance(30, 8, ModelSpec::m2pl(1), 3);
    std::vector<std::string> person_labels, item_labels;
    for (int i = 0; i < 30; ++i) person_labels.push_back("P" + std::to_string(i));
    for (int j = 0; j < 8; ++j) item_labels.push_back("Q" + std::to_string(j));
    inst.U.set_labels(person_labels, item_labels);
    save_triplets(inst.U, data);
  }

  const std::string out_a = dir.file("fit_a");
  CaptureStream capture(std::cout);
  REQUIRE(run_cli({"fit", "--data", data, "--dim", "1", "--lambda", "0.05", "--max-epochs", "60",
                   "--full-batch", "--seed", "3", "--out", out_a}) == 0);

  auto [theta, person_labels] = load_matrix(out_a + "/theta.csv");
  CHECK(theta.rows() == 30);
  CHECK(theta.cols() == 1);
  CHECK(person_labels.front() == "P0");
  CHECK(person_labels.back() == "P29");

  auto [items, item_labels] = load_matrix(out_a + "/items.csv");
  CHECK(items.rows() == 8);
  CHECK(items.cols() == 2);
  CHECK(item_labels.front() == "Q0");

  std::vector<std::string> trajectory = read_lines(out_a + "/trajectory.csv");
  REQUIRE(trajectory.size() >= 2);
  CHECK(trajectory[0] == "epoch,objective,validation_auc");
  for (std::size_t e = 1; e < trajectory.size(); ++e) {
    std::vector<std::string> fields = split_fields(trajectory[e]);
    REQUIRE(fields.size() == 3);
    CHECK(fields[0] == std::to_string(e));
    CHECK(std::isfinite(std::strtod(fields[1].c_str(), nullptr)));
    CHECK(fields[2].empty());
  }

  nlohmann::json manifest = nlohmann::json::parse(read_file(out_a + "/manifest.json"));
  CHECK(manifest["subcommand"] == "fit");
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["config"]["lambda"] == "0.05");
  CHECK(manifest["config"]["dim"] == "1");
  CHECK(manifest["inputs"][data] == file_digest(data));
  CHECK(manifest["timings"].contains("fit"));
  CHECK(manifest["timings"].contains("load"));

  SUBCASE("reruns are byte-identical") {
    const std::string out_b = dir.file("fit_b");
    REQUIRE(run_cli({"fit", "--data", data, "--dim", "1", "--lambda", "0.05", "--max-epochs",
                     "60", "--full-batch", "--seed", "3", "--out", out_b}) == 0);
    CHECK(read_file(out_a + "/theta.csv") == read_file(out_b + "/theta.csv"));
    CHECK(read_file(out_a + "/items.csv") == read_file(out_b + "/items.csv"));
    CHECK(read_file(out_a + "/trajectory.csv") == read_file(out_b + "/trajectory.csv"));
  }

  SUBCASE("scoring against the fitted items reuses the identifiers") {
    const std::string score_out = dir.file("scores");
    REQUIRE(run_cli({"score", "--items", out_a + "/items.csv", "--data", data, "--out",
                     score_out}) == 0);

    std::vector<std::string> persons = read_lines(score_out + "/persons.csv");
    REQUIRE(persons.size() == 31);
    CHECK(persons[0] == "person_id,col0,scored");
    CHECK(split_fields(persons[1])[0] == "P0");
    CHECK(split_fields(persons[1])[2] == "1");

    std::vector<std::string> predictions = read_lines(score_out + "/predictions.csv");
    ResponseMatrix U = load_triplets(data);
    REQUIRE(predictions.size() == U.observed() + 1);
    CHECK(predictions[0] == "person_id,item_id,response,probability");
    std::vector<std::string> first = split_fields(predictions[1]);
    REQUIRE(first.size() == 4);
    double p = std::strtod(first[3].c_str(), nullptr);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("explore command emits the selection table") {
  TempDir dir;
  const std::string sim_out = dir.file("sim");
  CaptureStream capture(std::cout);
  REQUIRE(run_cli({"simulate", "--m", "40", "--n", "12", "--d", "2", "--seed", "9", "--out",
                   sim_out}) == 0);
  const std::string data = sim_out + "/triplets.csv";

  auto run_explore = [&](const std::string& method, const std::string& out) {
    return run_cli({"explore", "--data", data, "--method", method, "--dims", "0,1", "--lambdas",
                    "0.02,0.05", "--folds", "2", "--restarts", "1", "--sample-p", "0.75",
                    "--max-epochs", "40", "--seed", "17", "--out", out});
  };

  const std::string out_a = dir.file("ex_a");
  REQUIRE(run_explore("elementwise", out_a) == 0);

  std::vector<std::string> lines = read_lines(out_a + "/table.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "method,dim,person_intercept,item_intercept,lambda_star,tuning_auc,test_auc,test_acc,"
        "test_gk,test_rmse,test_logloss,undefined_auc_units,seconds,selected");

  int selected_count = 0;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::vector<std::string> fields = split_fields(lines[k]);
    REQUIRE(fields.size() == 14);
    CHECK(fields[0] == "elementwise");
    CHECK(fields[1] == std::to_string(k - 1));
    double auc = std::strtod(fields[6].c_str(), nullptr);
    CHECK(auc >= 0.0);
    CHECK(auc <= 1.0);
    if (fields[13] == "1") ++selected_count;
  }
  CHECK(selected_count == 1);

  SUBCASE("reruns agree except for timings") {
    const std::string out_b = dir.file("ex_b");
    REQUIRE(run_explore("elementwise", out_b) == 0);
    std::vector<std::string> again = read_lines(out_b + "/table.csv");
    REQUIRE(again.size() == lines.size());
    for (std::size_t k = 0; k < lines.size(); ++k) {
      std::vector<std::string> fa = split_fields(lines[k]);
      std::vector<std::string> fb = split_fields(again[k]);
      REQUIRE(fa.size() == fb.size());
      for (std::size_t c = 0; c < fa.size(); ++c) {
        if (k > 0 && c == 12) continue;
        CHECK(fa[c] == fb[c]);
      }
    }
  }

  SUBCASE("striated method runs the same surface") {
    const std::string out_c = dir.file("ex_c");
    REQUIRE(run_explore("striated", out_c) == 0);
    std::vector<std::string> table = read_lines(out_c + "/table.csv");
    REQUIRE(table.size() == 3);
    CHECK(split_fields(table[1])[0] == "striated");
  }

  SUBCASE("report distills the table") {
    const std::string rep_out = dir.file("rep");
    REQUIRE(run_cli({"report", "--table", out_a + "/table.csv", "--out", rep_out}) == 0);
    std::vector<std::string> rep = read_lines(rep_out + "/auc_vs_dim.csv");
    REQUIRE(rep.size() == 3);
    CHECK(rep[0] == "method,dim,lambda_star,test_auc,selected");
    for (std::size_t k = 1; k < rep.size(); ++k) {
      std::vector<std::string> from_table = split_fields(lines[k]);
      std::vector<std::string> from_report = split_fields(rep[k]);
      REQUIRE(from_report.size() == 5);
      CHECK(from_report[0] == from_table[0]);
      CHECK(from_report[1] == from_table[1]);
      CHECK(from_report[2] == from_table[4]);
      CHECK(from_report[3] == from_table[6]);
      CHECK(from_report[4] == from_table[13]);
    }
  }

  SUBCASE("report computes recovery from ability files") {
    const std::string rep_out = dir.file("rep2");
    REQUIRE(run_cli({"report", "--est-theta", sim_out + "/true_theta.csv", "--true-theta",
                     sim_out + "/true_theta.csv", "--out", rep_out}) == 0);
    std::vector<std::string> rep = read_lines(rep_out + "/recovery.csv");
    REQUIRE(rep.size() == 3);
    CHECK(rep[0] == "estimate_col,true_col,correlation,variance_share");
    std::vector<int> covered;
    for (std::size_t k = 1; k < rep.size(); ++k) {
      std::vector<std::string> fields = split_fields(rep[k]);
      REQUIRE(fields.size() == 4);
      covered.push_back(static_cast<int>(std::strtol(fields[1].c_str(), nullptr, 10)));
      double corr = std::strtod(fields[2].c_str(), nullptr);
      double share = std::strtod(fields[3].c_str(), nullptr);
      CHECK(std::abs(corr) > 0.3);
      CHECK(std::abs(corr) <= 1.0);
      CHECK(share == corr * corr);
    }
    std::sort(covered.begin(), covered.end());
    CHECK(covered == std::vector<int>{0, 1});
  }
}

TEST_CASE("bound command prints the ceiling") {
  TempDir dir;
  CaptureStream capture(std::cout);

  SUBCASE("standard normal abilities and difficulties") {
    const std::string out = dir.file("bound");
    REQUIRE(run_cli({"bound", "--theta", "normal:0,1", "--beta", "normal:0,1", "--out", out}) ==
            0);
    std::string printed = capture.text();
    REQUIRE(printed.rfind("expected_accuracy ", 0) == 0);
    double value = std::strtod(printed.c_str() + std::string("expected_accuracy ").size(),
                               nullptr);
    CHECK(std::abs(value - 0.7252) < 1e-3);

    std::vector<std::string> csv = read_lines(out + "/bound.csv");
    REQUIRE(csv.size() == 2);
    CHECK(csv[0] == "theta,beta,expected_accuracy");
    CHECK(split_fields(csv[1]).back() == format_double(value));
  }

  SUBCASE("empirical sample files") {
    const std::string sample = dir.file("sample.txt");
    write_file(sample, "0.0\n1.0\n-1.0\n");
    CHECK(run_cli({"bound", "--theta", "empirical:" + sample, "--beta", "point:0"}) == 0);
  }

  SUBCASE("grammar violations exit as usage errors") {
    CaptureStream errors(std::cerr);
    CHECK(run_cli({"bound", "--theta", "normal:0", "--beta", "point:0"}) == 2);
    CHECK(run_cli({"bound", "--theta", "gamma:1,1", "--beta", "point:0"}) == 2);
  }
}

TEST_CASE("command failures exit with their category code") {
  TempDir dir;
  CaptureStream capture(std::cout);
  CaptureStream errors(std::cerr);

  SUBCASE("unknown subcommand is a usage error") {
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({}) == 2);
  }

  SUBCASE("missing data file is an io error") {
    CHECK(run_cli({"fit", "--data", dir.file("absent.csv"), "--dim", "1", "--out",
                   dir.file("out")}) == 3);
  }

  SUBCASE("corrupt data file is a data error with a machine-readable record") {
    const std::string bad = dir.file("bad.csv");
    write_file(bad,
               "person_id,item_id,response\n"
               "a,x,1\n"
               "a,x,1\n");
    CHECK(run_cli({"fit", "--data", bad, "--dim", "1", "--out", dir.file("out")}) == 4);

    std::istringstream records(errors.text());
    std::string line;
    REQUIRE(std::getline(records, line));
    nlohmann::json record = nlohmann::json::parse(line);
    CHECK(record["error"]["category"] == "data");
    CHECK(record["error"]["code"] == 4);
    CHECK(record["error"]["message"].get<std::string>().find("duplicate") != std::string::npos);
  }

  SUBCASE("an empty model is a config error") {
    CHECK(run_cli({"fit", "--data", dir.file("absent.csv"), "--dim", "0", "--no-item-intercept",
                   "--out", dir.file("out")}) == 5);
  }

  SUBCASE("an indefinite covariance is a config error") {
    const std::string sigma = dir.file("sigma.csv");
    write_file(sigma, "1,2\n2,1\n");
    CHECK(run_cli({"simulate", "--m", "5", "--n", "4", "--d", "2", "--sigma", sigma, "--out",
                   dir.file("out")}) == 5);
  }

  SUBCASE("help exits cleanly") {
    CHECK(run_cli({"--help"}) == 0);
    CHECK(capture.text().find("simulate") != std::string::npos);
  }
}
