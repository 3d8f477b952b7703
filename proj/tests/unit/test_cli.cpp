#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sagechain/error.hpp"
#include "sagechain/synth.hpp"
#include "sagechain_cli/cli.hpp"

using namespace sagechain;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("sagechain_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
    EXPECT_EQ(run_cli({}).code, cli::kExitInput);
    EXPECT_EQ(run_cli({"train", "--epochs", "many"}).code, cli::kExitInput);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitInput);
}

TEST(Cli, MissingInputFileIsInputError) {
    const auto dir = fresh_dir("missing");
    const auto r = run_cli({"ingest", "--dataset", "shipping", "--path", (dir / "absent.csv").string()});
    EXPECT_EQ(r.code, cli::kExitInput);
    EXPECT_NE(r.err.find("absent.csv"), std::string::npos);
}

TEST(Cli, SchemaMismatchIsInputError) {
    const auto dir = fresh_dir("schema");
    const auto csv = write_file(dir / "bad.csv", "a,b\n1,2\n");
    const auto r = run_cli({"ingest", "--dataset", "shipping", "--path", csv.string(), "--out", dir.string()});
    EXPECT_EQ(r.code, cli::kExitInput);
    EXPECT_NE(r.err.find("missing required column"), std::string::npos);
}

TEST(Cli, IngestSummarizesAndWritesDeterministicCache) {
    const auto dir = fresh_dir("ingest");
    const auto csv = write_file(dir / "ship.csv", synth_csv(DatasetId::Shipping, 80, 4));
    const auto a = run_cli({"ingest", "--dataset", "shipping", "--path", csv.string(), "--out", (dir / "a").string()});
    const auto b = run_cli({"ingest", "--dataset", "shipping", "--path", csv.string(), "--out", (dir / "b").string()});
    ASSERT_EQ(a.code, cli::kExitOk) << a.err;
    EXPECT_NE(a.out.find("80"), std::string::npos);
    EXPECT_EQ(slurp(dir / "a" / "shipping.cache"), slurp(dir / "b" / "shipping.cache"));
    const auto cached = cli::read_cache(dir / "a" / "shipping.cache");
    EXPECT_EQ(cached.row_count(), 80u);
}

TEST(Cli, CacheRoundTripAndCorruptionDetection) {
    std::istringstream in(synth_csv(DatasetId::SmartLogistics, 30, 2));
    const auto enc = encode_categoricals(load_dataset(in, DatasetId::SmartLogistics),
                                         builtin_schema(DatasetId::SmartLogistics));
    const auto bytes = cli::serialize_cache(enc);
    const auto back = cli::deserialize_cache(bytes);
    EXPECT_EQ(back.column_names, enc.column_names);
    EXPECT_EQ(back.rows, enc.rows);
    EXPECT_EQ(cli::serialize_cache(back), bytes);
    auto corrupt = bytes;
    corrupt[corrupt.size() / 2] ^= 0x01;
    EXPECT_THROW(cli::deserialize_cache(corrupt), SchemaError);
    EXPECT_EQ(cli::fnv1a(""), 14695981039346656037ULL);
    EXPECT_EQ(cli::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Cli, ConfigTextParsing) {
    const auto cfg = cli::parse_config_text("# comment\nepochs = 5\n\n  variant=gsn  # trailing\n");
    EXPECT_EQ(cfg.at("epochs"), "5");
    EXPECT_EQ(cfg.at("variant"), "gsn");
    EXPECT_THROW(cli::parse_config_text("epochs = 1\nepochs = 2\n"), ConfigError);
    EXPECT_THROW(cli::parse_config_text("no equals sign\n"), ConfigError);
}

TEST(Cli, UnknownConfigKeyIsInputError) {
    const auto dir = fresh_dir("cfg");
    const auto csv = write_file(dir / "sl.csv", synth_csv(DatasetId::SmartLogistics, 100, 1));
    const auto cfg = write_file(dir / "run.cfg", "learning_rate = 0.1\n");
    const auto r = run_cli({"train", "--dataset", "smart-logistics", "--path", csv.string(), "--config", cfg.string(),
                            "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, cli::kExitInput);
    EXPECT_NE(r.err.find("learning_rate"), std::string::npos);
}

TEST(Cli, TrainWritesReportAndFlagsOverrideConfig) {
    const auto dir = fresh_dir("train");
    const auto csv = write_file(dir / "sl.csv", synth_csv(DatasetId::SmartLogistics, 200, 1));
    const auto cfg = write_file(dir / "run.cfg", "epochs = 50\nk_folds = 2\nvariant = gsn\n");
    const auto out = dir / "o";
    const auto r = run_cli({"train", "--dataset", "smart-logistics", "--path", csv.string(), "--config", cfg.string(),
                            "--epochs", "2", "--out", out.string(), "-q"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto json = slurp(out / "report.json");
    EXPECT_NE(json.find("\"epochs\""), std::string::npos);
    EXPECT_EQ(slurp(out / "history_fold0.csv").find("\n3,"), std::string::npos);  // two epochs only
    EXPECT_TRUE(fs::exists(out / "metrics.csv"));
    const auto again = run_cli({"report", out.string()});
    EXPECT_EQ(again.code, cli::kExitOk);
    EXPECT_NE(again.out.find("true\\pred"), std::string::npos);
}

TEST(Cli, OverflowingColumnIsInputError) {
    const auto dir = fresh_dir("overflow");
    std::istringstream lines(synth_csv(DatasetId::SmartLogistics, 100, 1));
    std::string line, patched;
    std::getline(lines, line);
    patched = line + "\n";
    while (std::getline(lines, line)) patched += "1.7e308" + line.substr(line.find(',')) + "\n";
    const auto path = write_file(dir / "sl.csv", patched);
    const auto r = run_cli({"train", "--dataset", "smart-logistics", "--path", path.string(), "--epochs", "1",
                            "--k-folds", "2", "--out", (dir / "o").string(), "-q"});
    EXPECT_EQ(r.code, cli::kExitInput) << r.err;
    EXPECT_NE(r.err.find("Latitude"), std::string::npos) << r.err;
}

TEST(Cli, DivergentTrainingIsTrainingFailure) {
    // An absurd step size blows the weights up until the loss is not finite.
    const auto dir = fresh_dir("diverge");
    const auto csv = write_file(dir / "sl.csv", synth_csv(DatasetId::SmartLogistics, 200, 1));
    const auto cfg = write_file(dir / "run.cfg", "lr_graph = 1e300\nlr_seq = 1e300\nnormalization = none\n");
    const auto r = run_cli({"train", "--dataset", "smart-logistics", "--path", csv.string(), "--config", cfg.string(),
                            "--epochs", "3", "--k-folds", "2", "--out", (dir / "o").string(), "-q"});
    EXPECT_EQ(r.code, cli::kExitTraining) << r.err;
    EXPECT_TRUE(fs::exists(dir / "o" / "failed" / "error.txt"));
}

TEST(Cli, SynthWritesLoadableFile) {
    const auto dir = fresh_dir("synth");
    const auto r = run_cli({"synth", "--dataset", "dataco", "--rows", "40", "--seed", "3", "--out",
                            (dir / "d.csv").string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(load_dataset(dir / "d.csv", DatasetId::DataCo).row_count(), 40u);
}
