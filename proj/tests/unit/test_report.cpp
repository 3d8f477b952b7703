#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sagechain/error.hpp"
#include "sagechain/report.hpp"

using namespace sagechain;
namespace fs = std::filesystem;

namespace {

ExperimentReport sample_report() {
    ExperimentReport r;
    r.config = {{"variant", "h-gsn"}, {"epochs", "2"}};
    r.dataset = "smart-logistics";
    r.task = "traffic_status";
    r.variant = "h-gsn";
    r.data_source = "fixture.csv";
    r.class_names = {"Detour", "Heavy", "Clear"};
    r.rows = 120;
    r.windows = 6;
    for (int f = 0; f < 2; ++f) {
        FoldResult fold;
        fold.fold = f;
        fold.train_windows = 3;
        fold.val_windows = 1;
        fold.test_windows = {static_cast<std::size_t>(f), static_cast<std::size_t>(f + 2)};
        fold.confusion = ConfusionMatrix::zeros(3);
        fold.confusion.at(0, 0) = 10 + f;
        fold.confusion.at(1, 2) = 5;
        fold.confusion.at(2, 2) = 25 - f;
        fold.metrics = metrics_from_confusion(fold.confusion);
        for (int e = 1; e <= 2; ++e)
            fold.history.epochs.push_back({e, 1.5 / e, 0.5, 0.5, 0.5 / e, 60.0 + e, 55.0 + e, 0.0});
        fold.history.best_epoch = 2;
        fold.history.best_val_acc = 57.0;
        r.folds.push_back(fold);
    }
    EmbeddingTable emb;
    emb.layer = "graph";
    emb.dims = 2;
    emb.rows.push_back({0, 0, 3, 1, 2, {0.25, -1.0}});
    r.embeddings.push_back(emb);
    r.finalize();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("sagechain_report_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Report, FinalizeSumsFoldConfusions) {
    const auto r = sample_report();
    EXPECT_EQ(r.aggregate_confusion.total(), 2u * 40u);
    EXPECT_EQ(r.aggregate_confusion.at(0, 0), 21u);
    EXPECT_EQ(r.aggregate, metrics_from_confusion(r.aggregate_confusion));
}

TEST(Report, JsonRoundTripsExceptSeconds) {
    auto r = sample_report();
    const auto text = report_to_json(r);
    EXPECT_EQ(report_from_json(text), r);
    r.folds[0].history.epochs[0].seconds = 3.25;
    EXPECT_EQ(report_to_json(r), text);  // timing never reaches report.json
    EXPECT_THROW(report_from_json("{\"format\": \"other\"}"), SchemaError);
    EXPECT_THROW(report_from_json("not json"), SchemaError);
}

TEST(Report, RenderWritesEveryArtifact) {
    const auto dir = fresh_dir("render");
    render_report(sample_report(), dir);
    for (const char* name : {"report.json", "metrics.csv", "confusion_traffic_status.csv", "history_fold0.csv",
                             "history_fold1.csv", "timing.json", "embeddings_graph.csv"})
        EXPECT_TRUE(fs::exists(dir / name)) << name;
    EXPECT_FALSE(fs::exists(dir / ".staging"));
    const auto metrics = slurp(dir / "metrics.csv");
    EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "fold,samples,accuracy,precision,recall,f1");
    EXPECT_NE(metrics.find("aggregate,80,"), std::string::npos);
    const auto conf = slurp(dir / "confusion_traffic_status.csv");
    EXPECT_EQ(conf.substr(0, conf.find('\n')), "true\\pred,c0,c1,c2");
}

TEST(Report, RenderIsRepeatableByteForByte) {
    const auto a = fresh_dir("repeat_a"), b = fresh_dir("repeat_b");
    render_report(sample_report(), a);
    render_report(sample_report(), b);
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
    EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(Report, EmptyReportLeavesDirectoryUntouched) {
    const auto dir = fresh_dir("empty");
    ExperimentReport r;
    EXPECT_THROW(render_report(r, dir), std::invalid_argument);
    EXPECT_FALSE(fs::exists(dir));
}

TEST(Report, NumberFormatting) {
    EXPECT_EQ(format_percent(91.25), "91.2");
    EXPECT_EQ(format_percent(100.0), "100.0");
    EXPECT_EQ(format_sig6(0.1234567), "0.123457");
    EXPECT_EQ(format_sig6(2.0), "2");
    EXPECT_EQ(format_sig6(1234567.0), "1.23457e+06");
}

TEST(Report, HistoryAndAblationCsvLayouts) {
    const auto h = history_csv(sample_report().folds[0].history);
    EXPECT_EQ(h.substr(0, h.find('\n')), "epoch,total_loss,graph_loss,conv_loss,lstm_loss,train_acc,val_acc,seconds");
    EXPECT_NE(h.find("\n1,1.5,0.5,0.5,0.5,61.0,56.0,0\n"), std::string::npos) << h;
    const auto a = ablation_csv({{2, 80.0, 0.01}, {3, 81.5, 0.02}});
    EXPECT_NE(a.find("3,81.5,0.02"), std::string::npos) << a;
}

TEST(Report, ConfusionGridIsAligned) {
    const auto r = sample_report();
    const auto grid = format_confusion(r.aggregate_confusion, r.class_names);
    std::istringstream in(grid);
    std::string line;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        if (width == 0) width = line.size();
        EXPECT_EQ(line.size(), width) << line;
    }
    EXPECT_NE(grid.find("true\\pred"), std::string::npos);
}
