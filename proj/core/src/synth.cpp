#include "sagechain/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "sagechain/adam.hpp"
#include "sagechain/csv.hpp"
#include "sagechain/error.hpp"

namespace sagechain {

namespace {

// Box-Muller on the engine's raw output keeps files identical across platforms.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return uniform_real(rng_, lo, hi); }
    double normal(double mean, double sd) {
        const double u1 = 1.0 - uniform(0.0, 1.0);
        const double u2 = uniform(0.0, 1.0);
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    std::size_t pick(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform(0.0, total);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (u < weights[i]) return i;
            u -= weights[i];
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 rng_;
};

std::string num(double v, int decimals = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string integer(double v) { return std::to_string(static_cast<long long>(std::llround(v))); }

class CsvOut {
public:
    explicit CsvOut(const DatasetSchema& schema) {
        for (const auto& f : schema.features) columns_.push_back(f.name);
        for (const auto& t : schema.targets)
            if (!schema.feature_index(t.name)) columns_.push_back(t.name);
        add_row(columns_);
    }

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size()) throw DimensionError("synth: row arity differs from header");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += csv_escape(cells[i]);
        }
        text_ += '\n';
    }

    const std::string& text() const { return text_; }

private:
    std::vector<std::string> columns_;
    std::string text_;
};

std::string smart_logistics(std::size_t rows, Gen& g) {
    const auto& schema = builtin_schema(DatasetId::SmartLogistics);
    const auto& status_levels = schema.target("shipment_status").levels;    // Delayed, In Transit, Delivered
    const auto& traffic_levels = schema.target("traffic_status").levels;    // Detour, Heavy, Clear
    const auto& trucks = schema.target("truck_id").levels;
    CsvOut out(schema);

    struct Truck {
        double lat, lon, inventory;
    };
    std::vector<Truck> fleet;
    for (std::size_t t = 0; t < trucks.size(); ++t)
        fleet.push_back({g.uniform(-40.0, 50.0), g.uniform(-120.0, 120.0), g.uniform(150.0, 450.0)});

    const double wait_mean[3] = {52.0, 36.0, 18.0};
    std::size_t traffic = g.index(3), status = g.index(3);
    double temperature = 24.0, humidity = 65.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (!g.chance(0.9)) traffic = (traffic + 1 + g.index(2)) % 3;
        const double waiting = std::clamp(g.normal(wait_mean[traffic], 8.0), 1.0, 90.0);
        const std::size_t truck = g.index(trucks.size());
        const double inventory = std::max(0.0, g.normal(fleet[truck].inventory, 40.0));
        // Status persists for a few rows and otherwise follows waiting time
        // (Delayed) or inventory (Delivered).
        if (!g.chance(0.55)) {
            const double delayed = std::exp(0.09 * (waiting - 36.0));
            const double delivered = std::exp(0.012 * (inventory - 300.0));
            status = g.pick({delayed, 1.0, delivered});
        }
        temperature = std::clamp(temperature + g.normal(0.0, 0.6), 15.0, 35.0);
        humidity = std::clamp(humidity + g.normal(0.0, 1.5), 40.0, 90.0);
        const double amount = std::max(5.0, g.normal(status == 2 ? 380.0 : 250.0, 90.0));
        const double frequency = std::clamp(std::round(g.normal(traffic == 2 ? 7.0 : 5.0, 2.0)), 1.0, 12.0);
        const bool delay = status == 0 ? g.chance(0.9) : g.chance(waiting > 45.0 ? 0.55 : 0.12);

        out.add_row({num(fleet[truck].lat + g.normal(0.0, 0.8)), num(fleet[truck].lon + g.normal(0.0, 0.8)),
                     integer(inventory), status_levels[status], num(temperature, 1), num(humidity, 1),
                     traffic_levels[traffic], integer(waiting), integer(amount), integer(frequency), trucks[truck],
                     delay ? "1" : "0"});
    }
    return out.text();
}

std::string dataco(std::size_t rows, Gen& g) {
    const auto& schema = builtin_schema(DatasetId::DataCo);
    const auto& types = schema.features[*schema.feature_index("Type")].levels;
    const auto& statuses = schema.features[*schema.feature_index("Order Status")].levels;
    const auto& modes = schema.target("shipping_mode").levels;  // Standard, First, Second, Same Day
    CsvOut out(schema);
    const double scheduled_days[4] = {4.0, 1.0, 2.0, 0.0};
    const double late_bias[4] = {0.35, 0.95, 0.75, 0.45};
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t mode = g.pick({0.6, 0.15, 0.2, 0.05});
        const double scheduled = scheduled_days[mode];
        const bool late = g.chance(late_bias[mode]);
        const double real = late ? scheduled + 1.0 + static_cast<double>(g.index(3)) : std::max(0.0, scheduled - static_cast<double>(g.index(2)));
        const double price = std::max(10.0, g.normal(180.0, 90.0));
        const double rate = std::round(g.uniform(0.0, 0.25) * 100.0) / 100.0;
        const double discount = price * rate;
        const double total = price - discount;
        const double ratio = std::clamp(g.normal(0.12, 0.3), -2.75, 0.5);
        out.add_row({types[g.index(types.size())], integer(real), integer(scheduled), num(total * ratio, 2), num(total, 2),
                     num(g.uniform(17.0, 48.0)), num(g.uniform(-125.0, -65.0)), num(discount, 2), num(rate, 2),
                     num(total, 2), num(ratio, 2), statuses[g.index(statuses.size())], late ? "1" : "0", modes[mode]});
    }
    return out.text();
}

std::string shipping(std::size_t rows, Gen& g) {
    const auto& schema = builtin_schema(DatasetId::Shipping);
    const auto& warehouses = schema.target("warehouse").levels;
    const auto& modes = schema.target("shipment_mode").levels;  // Flight, Ship, Road
    const char* importance[] = {"low", "medium", "high"};
    const char* gender[] = {"F", "M"};
    CsvOut out(schema);
    const double weight_mean[3] = {2200.0, 4600.0, 3400.0};
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t mode = g.index(3);
        const std::size_t warehouse = g.index(warehouses.size());
        const double discount = std::max(1.0, std::round(std::abs(g.normal(8.0, 12.0))));
        const double weight = std::max(1000.0, g.normal(weight_mean[mode] + 150.0 * static_cast<double>(warehouse), 700.0));
        const bool late = discount > 10.0 ? true : g.chance(weight > 4000.0 ? 0.35 : 0.55);
        out.add_row({integer(std::clamp(std::round(g.normal(4.0 + 0.4 * static_cast<double>(warehouse), 1.0)), 2.0, 7.0)),
                     integer(1.0 + static_cast<double>(g.index(5))), integer(std::max(90.0, g.normal(210.0, 48.0))),
                     integer(std::clamp(std::round(g.normal(3.5, 1.5)), 2.0, 10.0)), importance[g.pick({0.48, 0.43, 0.09})],
                     gender[g.index(2)], integer(discount), integer(weight), warehouses[warehouse], modes[mode],
                     late ? "1" : "0"});
    }
    return out.text();
}

}  // namespace

std::size_t default_synth_rows(DatasetId dataset) {
    switch (dataset) {
        case DatasetId::DataCo: return 2000;
        case DatasetId::Shipping: return 2000;
        case DatasetId::SmartLogistics: return 1000;
    }
    return 1000;
}

std::string synth_csv(DatasetId dataset, std::size_t rows, std::uint64_t seed) {
    if (rows == 0) throw ConfigError("synth needs at least one row");
    Gen g(seed);
    switch (dataset) {
        case DatasetId::DataCo: return dataco(rows, g);
        case DatasetId::Shipping: return shipping(rows, g);
        case DatasetId::SmartLogistics: return smart_logistics(rows, g);
    }
    throw ConfigError("unknown dataset");
}

std::string separable_csv(std::size_t rows, std::uint64_t seed) {
    if (rows == 0) throw ConfigError("synth needs at least one row");
    Gen g(seed);
    const auto& schema = builtin_schema(DatasetId::Shipping);
    const auto& modes = schema.target("shipment_mode").levels;
    CsvOut out(schema);
    const char* importance[] = {"low", "medium", "high"};
    const char* gender[] = {"F", "M"};
    // Class centres sit far apart along three numeric axes.
    const double calls[3] = {2.0, 5.0, 8.0};
    const double cost[3] = {120.0, 200.0, 280.0};
    const double weight[3] = {1500.0, 3500.0, 5500.0};
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t c = g.index(3);
        out.add_row({integer(calls[c] + g.normal(0.0, 0.4)), integer(1.0 + static_cast<double>(g.index(5))),
                     integer(cost[c] + g.normal(0.0, 12.0)), integer(2.0 + static_cast<double>(g.index(6))),
                     importance[g.index(3)], gender[g.index(2)], integer(1.0 + static_cast<double>(g.index(60))),
                     integer(weight[c] + g.normal(0.0, 250.0)), "A", modes[c], g.chance(0.5) ? "1" : "0"});
    }
    return out.text();
}

}  // namespace sagechain
