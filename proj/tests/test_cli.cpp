#include "covsamp/cli.hpp"
#include "covsamp/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "covsamp");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return covsamp::run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("covsamp_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kSmall = R"({"population":{"random":{"k":8,"seed":3}},"d1":[2,4],"seed":5})";

}  // namespace

TEST_CASE("enumerate writes summaries") {
    auto dir = scratch("enum");
    write(dir / "c.json", kSmall);
    CHECK(run({"enumerate", "--config", (dir / "c.json").string(), "--out", (dir / "o").string()}) == 0);
    auto doc = covsamp::read_json_file((dir / "o" / "summary.json").string());
    CHECK(doc["summaries"].size() == 12);
    CHECK(doc["summaries"][0]["count"] == 28);
    CHECK(fs::exists(dir / "o" / "histograms.csv"));
    CHECK(fs::exists(dir / "o" / "benchmark.csv"));
}

TEST_CASE("sample is deterministic across worker counts") {
    auto dir = scratch("sample");
    write(dir / "c.json", kSmall);
    auto strip = [](covsamp::Json doc) { return doc["summaries"].dump(); };
    std::string first;
    for (const char* w : {"1", "3"}) {
        auto out = dir / (std::string("o") + w);
        REQUIRE(run({"sample", "--config", (dir / "c.json").string(), "--out", out.string(), "--workers", w,
                     "--n-draws", "300"}) == 0);
        auto s = strip(covsamp::read_json_file((out / "summary.json").string()));
        if (first.empty()) first = s;
        else CHECK(s == first);
    }
}

TEST_CASE("exit codes") {
    auto dir = scratch("codes");
    write(dir / "bad.json", "{not json");
    CHECK(run({"enumerate", "--config", (dir / "bad.json").string(), "--out", dir.string()}) == 2);
    CHECK(run({"enumerate", "--bogus-flag"}) == 2);
    write(dir / "big.json", R"({"population":{"random":{"k":30,"seed":1}},"d1":[15]})");
    CHECK(run({"enumerate", "--config", (dir / "big.json").string(), "--out", dir.string(), "--cap", "1000"}) == 4);
    write(dir / "np.json", R"({"population":{"random":{"k":8,"seed":1}},"d1":[2],"params":["Nope"]})");
    CHECK(run({"enumerate", "--config", (dir / "np.json").string(), "--out", dir.string()}) == 2);
    write(dir / "conv.json",
          R"({"dgp":{"structure":{"type":"MA1","rho":0.3}},"k_grid":[40],"r":[0.5,1,2],"n_draws":20})");
    CHECK(run({"convergence", "--config", (dir / "conv.json").string(), "--out", dir.string()}) == 2);
    write(dir / "negr.json", R"({"dgp":{"structure":{"type":"MA1","rho":0.3}},"k_grid":[40,80],"r":[-1]})");
    CHECK(run({"convergence", "--config", (dir / "negr.json").string(), "--out", dir.string()}) == 2);
}

TEST_CASE("limits and validate-dgp") {
    auto dir = scratch("limits");
    write(dir / "l.json", R"({"dgp":{"structure":{"type":"MA1","rho":0.3}},"k":2000})");
    CHECK(run({"limits", "--config", (dir / "l.json").string(), "--out", dir.string()}) == 0);
    auto doc = covsamp::read_json_file((dir / "limits.json").string());
    CHECK(std::abs(doc["constants"]["c_pi"].get<double>() - 0.625) < 0.01);
    write(dir / "v.json", R"({"dgp":{"structure":{"type":"MA1","rho":0.3}},"k_grid":[50,200]})");
    CHECK(run({"validate-dgp", "--config", (dir / "v.json").string(), "--out", dir.string()}) == 0);
    CHECK(fs::exists(dir / "assumptions.json"));
}

TEST_CASE("calibrate output feeds enumerate") {
    auto dir = scratch("calib");
    std::ostringstream csv;
    csv << "y,x,w1,w2,w3\n";
    for (int i = 0; i < 40; ++i)
        csv << (i % 7) + 0.3 * i << ',' << (i % 5) << ',' << (i % 3) << ',' << ((i * 7) % 11) << ',' << (i % 4) * 0.5
            << '\n';
    write(dir / "data.csv", csv.str());
    write(dir / "cal.json",
          R"({"dataset":{"path":"data.csv","outcome":"y","treatment":"x","covariates":["w1","w2","w3"]}})");
    REQUIRE(run({"calibrate", "--config", (dir / "cal.json").string(), "--out", dir.string()}) == 0);
    write(dir / "e.json", R"({"population":{"covariance":"covariance.json"},"d1":[1,2]})");
    CHECK(run({"enumerate", "--config", (dir / "e.json").string(), "--out", (dir / "o").string()}) == 0);
}
