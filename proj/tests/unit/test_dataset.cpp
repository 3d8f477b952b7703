#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sagechain/dataset.hpp"
#include "sagechain/error.hpp"
#include "sagechain/synth.hpp"

using namespace sagechain;

namespace {

const char* kShippingHeader =
    "ID,Warehouse_block,Mode_of_Shipment,Customer_care_calls,Customer_rating,Cost_of_the_Product,"
    "Prior_purchases,Product_importance,Gender,Discount_offered,Weight_in_gms,Reached.on.Time_Y.N\n";

RawTable load_text(const std::string& text, DatasetId id) {
    std::istringstream in(text);
    return load_dataset(in, id);
}

}  // namespace

TEST(Dataset, LoadsShippingAndDropsUnknownColumns) {
    const auto t = load_text(std::string(kShippingHeader) +
                                 "1,D,Flight,4,2,177,3,low,F,44,1233,1\n"
                                 "2,F,Ship,5,5,216,2,medium,M,59,3088,1\n",
                             DatasetId::Shipping);
    EXPECT_EQ(t.row_count(), 2u);
    EXPECT_EQ(t.rejected_rows, 0u);
    ASSERT_EQ(t.dropped_columns.size(), 1u);
    EXPECT_EQ(t.dropped_columns[0], "ID");
    EXPECT_DOUBLE_EQ(std::get<double>(t.rows[1][t.column_index("Weight_in_gms")]), 3088.0);
}

TEST(Dataset, RejectsUnparseableAndShortRows) {
    const auto t = load_text(std::string(kShippingHeader) +
                                 "1,D,Flight,4,2,177,3,low,F,44,1233,1\n"
                                 "2,F,Ship,five,5,216,2,medium,M,59,3088,1\n"
                                 "3,F,Ship,5\n",
                             DatasetId::Shipping);
    EXPECT_EQ(t.row_count(), 1u);
    EXPECT_EQ(t.rejected_rows, 2u);
}

TEST(Dataset, MissingColumnIsSchemaError) {
    EXPECT_THROW(load_text("Customer_care_calls,Gender\n1,F\n", DatasetId::Shipping), SchemaError);
    EXPECT_THROW(load_text("", DatasetId::Shipping), SchemaError);
}

TEST(Dataset, UndeclaredLevelIsEncodingError) {
    const auto& schema = builtin_schema(DatasetId::Shipping);
    const auto t = load_text(std::string(kShippingHeader) + "1,D,Flight,4,2,177,3,urgent,F,44,1233,1\n",
                             DatasetId::Shipping);
    EXPECT_THROW(encode_categoricals(t, schema), EncodingError);
    const auto u = load_text(std::string(kShippingHeader) + "1,D,Rocket,4,2,177,3,low,F,44,1233,1\n",
                             DatasetId::Shipping);
    EXPECT_THROW(extract_target(encode_categoricals(u, schema), schema, "shipment_mode"), EncodingError);
}

TEST(Dataset, FeatureMatrixExcludesActiveTargetColumn) {
    const auto& schema = builtin_schema(DatasetId::SmartLogistics);
    std::istringstream in(synth_csv(DatasetId::SmartLogistics, 40, 3));
    const auto enc = encode_categoricals(load_dataset(in, DatasetId::SmartLogistics), schema);
    const auto m = build_feature_matrix(enc, schema, "traffic_status");
    EXPECT_EQ(m.cols, 9u);
    EXPECT_EQ(std::count(m.column_names.begin(), m.column_names.end(), "Traffic_Status"), 0);
    const auto full = build_feature_matrix(enc, schema, "logistics_delay");
    EXPECT_EQ(full.cols, 10u);
    EXPECT_EQ(m.labels.at("traffic_status").size(), 40u);
}

TEST(Dataset, BalanceClassesKeepsMinorityCountPerClass) {
    const std::vector<int> labels{0, 0, 0, 0, 1, 1, 2, 2, 2, 0, 1, 2};
    const auto idx = balance_classes(labels, 3, 7);
    ASSERT_EQ(idx.size(), 9u);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    std::vector<int> kept;
    for (auto i : idx) kept.push_back(labels[i]);
    EXPECT_EQ(class_counts(kept, 3), (std::vector<std::size_t>{3, 3, 3}));
    EXPECT_EQ(idx, balance_classes(labels, 3, 7));
    EXPECT_THROW(balance_classes(std::vector<int>{0, 0, 2}, 3, 1), std::invalid_argument);
}

TEST(Dataset, ScalerStandardizesTrainingRowsOnly) {
    FeatureMatrix m;
    m.rows = 4;
    m.cols = 2;
    m.values = {1, 5, 3, 5, 5, 5, 100, 5};
    const std::vector<std::size_t> train{0, 1, 2};
    const auto s = fit_scaler(m, train);
    EXPECT_DOUBLE_EQ(s.columns[0].mean, 3.0);
    EXPECT_NEAR(s.columns[0].std, std::sqrt(8.0 / 3.0), 1e-12);
    EXPECT_DOUBLE_EQ(s.columns[1].std, 0.0);  // constant column
    const auto out = apply_scaler(m, s);
    EXPECT_NEAR(out.at(0, 0), -2.0 / std::sqrt(8.0 / 3.0), 1e-12);
    EXPECT_DOUBLE_EQ(out.at(3, 1), 0.0);
    EXPECT_NEAR(out.at(3, 0), 97.0 / std::sqrt(8.0 / 3.0), 1e-9);
}

TEST(Dataset, StandardScaleIsAffineInvariant) {
    FeatureMatrix a;
    a.rows = 5;
    a.cols = 1;
    a.values = {1.0, 4.0, -2.0, 7.5, 0.25};
    FeatureMatrix b = a;
    for (double& v : b.values) v = 3.0 * v - 11.0;
    const auto sa = standard_scale(a), sb = standard_scale(b);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(sa.values[i], sb.values[i], 1e-12);
}

TEST(Dataset, WindowPartitionDropsRemainder) {
    const auto ws = window_partition(103, 20);
    ASSERT_EQ(ws.windows.size(), 5u);
    EXPECT_EQ(ws.dropped_rows, 3u);
    EXPECT_EQ(ws.windows[4], (WindowRange{80, 100}));
    for (const auto& w : ws.windows) EXPECT_EQ(w.size(), 20u);
    EXPECT_THROW(window_partition(10, 20), std::invalid_argument);
}

TEST(Dataset, SeededShuffleIsAPermutationAndDeterministic) {
    std::vector<std::size_t> a(50), b;
    std::iota(a.begin(), a.end(), 0);
    b = a;
    seeded_shuffle(a, 42);
    seeded_shuffle(b, 42);
    EXPECT_EQ(a, b);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Dataset, ShippedFixturesLoad) {
    const std::pair<DatasetId, const char*> fixtures[] = {{DatasetId::DataCo, "dataco_50.csv"},
                                                          {DatasetId::Shipping, "shipping_50.csv"},
                                                          {DatasetId::SmartLogistics, "smart_logistics_50.csv"}};
    for (const auto& [id, name] : fixtures) {
        std::ifstream in(std::string(SAGECHAIN_SOURCE_DIR) + "/data/fixtures/" + name);
        ASSERT_TRUE(in) << name;
        EXPECT_EQ(load_dataset(in, id).row_count(), 50u) << name;
    }
}
