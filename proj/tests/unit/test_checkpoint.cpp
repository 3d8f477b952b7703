#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>

#include "sagechain/checkpoint.hpp"
#include "sagechain/error.hpp"
#include "sagechain/ops.hpp"

using namespace sagechain;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("sagechain_ckpt_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}
}  // namespace

TEST(Checkpoint, RoundTripsValuesAndOptimizerState) {
    auto w = Tensor::from({2, 2}, {1.0, -2.0, 0.125, 3e-9}, true);
    auto b = Tensor::from({2}, {0.5, -0.5}, true);
    Adam opt;
    opt.add_group("g", {w, b}, AdamHyper{});
    backward(ops::sum(ops::add(ops::linear(Tensor::full({1, 2}, 1.0), w, b), Tensor::zeros({1, 2}))));
    opt.step();
    ParameterList params{{"w", "g", w}, {"b", "g", b}};
    const auto stem = temp_dir("rt") / "model";
    save_checkpoint(stem, params, &opt, R"({"variant":"gsn"})");

    auto w2 = Tensor::zeros({2, 2}, true);
    auto b2 = Tensor::zeros({2}, true);
    Adam opt2;
    opt2.add_group("g", {w2, b2}, AdamHyper{});
    ParameterList loaded{{"w", "g", w2}, {"b", "g", b2}};
    load_checkpoint(stem, loaded, &opt2);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(w2[i], w[i]);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(b2[i], b[i]);
    EXPECT_EQ(opt2.steps(), 1u);
    EXPECT_EQ(opt2.groups()[0].m, opt.groups()[0].m);
    EXPECT_EQ(opt2.groups()[0].v, opt.groups()[0].v);
    EXPECT_EQ(nlohmann::json::parse(read_checkpoint_metadata(stem))["variant"], "gsn");
}

TEST(Checkpoint, ShapeOrNameMismatchIsSchemaError) {
    auto w = Tensor::from({2}, {1.0, 2.0}, true);
    ParameterList params{{"w", "g", w}};
    const auto stem = temp_dir("mm") / "model";
    save_checkpoint(stem, params, nullptr);
    ParameterList wrong_shape{{"w", "g", Tensor::zeros({3}, true)}};
    EXPECT_THROW(load_checkpoint(stem, wrong_shape), SchemaError);
    ParameterList wrong_name{{"v", "g", Tensor::zeros({2}, true)}};
    EXPECT_THROW(load_checkpoint(stem, wrong_name), SchemaError);
    ParameterList missing_file{{"w", "g", w}};
    EXPECT_THROW(load_checkpoint(stem.parent_path() / "absent", missing_file), SchemaError);
}
