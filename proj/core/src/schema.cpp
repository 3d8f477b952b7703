#include "sagechain/schema.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "sagechain/error.hpp"

namespace sagechain {

namespace {

FeatureColumn numeral(std::string name) { return {std::move(name), ColumnKind::Numeral, {}}; }
FeatureColumn digit(std::string name) { return {std::move(name), ColumnKind::Digit, {}}; }
FeatureColumn categorical(std::string name, std::vector<std::string> levels) {
    return {std::move(name), ColumnKind::Categorical, std::move(levels)};
}

const std::vector<std::string> kShipmentStatus{"Delayed", "In Transit", "Delivered"};
const std::vector<std::string> kTrafficStatus{"Detour", "Heavy", "Clear"};

DatasetSchema make_dataco() {
    DatasetSchema s;
    s.id = DatasetId::DataCo;
    s.features = {
        categorical("Type", {"Debit", "Transfer", "Payment", "Cash"}),
        digit("Days for shipping (real)"),
        digit("Days for shipment (scheduled)"),
        numeral("Benefit per order"),
        numeral("Sales per customer"),
        numeral("Latitude"),
        numeral("Longitude"),
        numeral("Order Item Discount"),
        numeral("Order Item Discount Rate"),
        numeral("Order Item Total"),
        numeral("Order Item Profit Ratio"),
        categorical("Order Status", {"Complete", "Processing", "PendingPayment", "Closed", "Pending", "On-hold",
                                     "Suspected-fraud", "Canceled", "Payment-Review"}),
    };
    s.targets = {
        {"delivery_status", "Late_delivery_risk", {"0", "1"}},
        {"shipping_mode", "Shipping Mode", {"Standard Class", "First Class", "Second Class", "Same Day"}},
    };
    return s;
}

DatasetSchema make_shipping() {
    DatasetSchema s;
    s.id = DatasetId::Shipping;
    s.features = {
        digit("Customer_care_calls"),
        digit("Customer_rating"),
        numeral("Cost_of_the_Product"),
        digit("Prior_purchases"),
        categorical("Product_importance", {"low", "medium", "high"}),
        categorical("Gender", {"F", "M"}),
        numeral("Discount_offered"),
        numeral("Weight_in_gms"),
    };
    s.targets = {
        {"warehouse", "Warehouse_block", {"A", "B", "C", "D", "F"}},
        {"shipment_mode", "Mode_of_Shipment", {"Flight", "Ship", "Road"}},
        {"reached_on_time", "Reached.on.Time_Y.N", {"0", "1"}},
    };
    return s;
}

DatasetSchema make_smart_logistics() {
    DatasetSchema s;
    s.id = DatasetId::SmartLogistics;
    s.features = {
        numeral("Latitude"),
        numeral("Longitude"),
        numeral("Inventory_Level"),
        categorical("Shipment_Status", kShipmentStatus),
        numeral("Temperature"),
        numeral("Humidity"),
        categorical("Traffic_Status", kTrafficStatus),
        numeral("Waiting_Time"),
        numeral("User_Transaction_Amount"),
        digit("User_Purchase_Frequency"),
    };
    std::vector<std::string> trucks;
    for (int i = 1; i <= 10; ++i) trucks.push_back("Truck_" + std::to_string(i));
    s.targets = {
        {"truck_id", "Truck_ID", trucks},
        {"shipment_status", "Shipment_Status", kShipmentStatus},
        {"traffic_status", "Traffic_Status", kTrafficStatus},
        {"logistics_delay", "Logistics_Delay", {"0", "1"}},
    };
    return s;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

}  // namespace

const TargetColumn& DatasetSchema::target(std::string_view task_id) const {
    for (const auto& t : targets)
        if (t.task_id == task_id) return t;
    throw SchemaError("dataset " + to_string(id) + " has no task '" + std::string(task_id) + "'");
}

bool DatasetSchema::has_task(std::string_view task_id) const {
    return std::any_of(targets.begin(), targets.end(), [&](const auto& t) { return t.task_id == task_id; });
}

std::optional<std::size_t> DatasetSchema::feature_index(std::string_view column_name) const {
    const auto key = normalize_key(column_name);
    for (std::size_t i = 0; i < features.size(); ++i)
        if (normalize_key(features[i].name) == key) return i;
    return std::nullopt;
}

std::vector<std::string> DatasetSchema::task_ids() const {
    std::vector<std::string> out;
    for (const auto& t : targets) out.push_back(t.task_id);
    return out;
}

const DatasetSchema& builtin_schema(DatasetId id) {
    static const DatasetSchema dataco = make_dataco();
    static const DatasetSchema shipping = make_shipping();
    static const DatasetSchema smart = make_smart_logistics();
    switch (id) {
        case DatasetId::DataCo: return dataco;
        case DatasetId::Shipping: return shipping;
        case DatasetId::SmartLogistics: return smart;
    }
    throw SchemaError("unknown dataset id");
}

std::string to_string(DatasetId id) {
    switch (id) {
        case DatasetId::DataCo: return "dataco";
        case DatasetId::Shipping: return "shipping";
        case DatasetId::SmartLogistics: return "smart-logistics";
    }
    return "unknown";
}

DatasetId parse_dataset_id(std::string_view text) {
    const auto key = normalize_key(text);
    if (key == "dataco") return DatasetId::DataCo;
    if (key == "shipping") return DatasetId::Shipping;
    if (key == "smartlogistics") return DatasetId::SmartLogistics;
    throw ConfigError("unknown dataset '" + std::string(text) + "' (expected dataco, shipping or smart-logistics)");
}

std::string default_file_name(DatasetId id) {
    switch (id) {
        case DatasetId::DataCo: return "DataCoSupplyChainDataset.csv";
        case DatasetId::Shipping: return "Train.csv";
        case DatasetId::SmartLogistics: return "smart_logistics_dataset.csv";
    }
    return {};
}

std::string normalize_key(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
    }
    return out;
}

std::optional<int> find_level(const std::vector<std::string>& levels, std::string_view text) {
    const auto key = normalize_key(text);
    if (key.empty()) return std::nullopt;
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (normalize_key(levels[i]) == key) return static_cast<int>(i);
    return std::nullopt;
}

std::vector<DatasetSchema> parse_schema_config(std::string_view text) {
    std::vector<DatasetSchema> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& why) {
        throw ConfigError("schema config line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail("unterminated section header");
            DatasetSchema s;
            s.id = parse_dataset_id(t.substr(1, t.size() - 2));
            out.push_back(std::move(s));
            continue;
        }
        if (out.empty()) fail("directive before any [dataset] section");
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        const auto key = trim(std::string_view(t).substr(0, eq));
        const auto fields = split(std::string_view(t).substr(eq + 1), '|');
        auto& schema = out.back();
        if (key == "feature") {
            if (fields.size() < 2) fail("feature needs '<name> | <kind>'");
            const auto kind = normalize_key(fields[1]);
            if (kind == "numeral" && fields.size() == 2) schema.features.push_back(numeral(fields[0]));
            else if (kind == "digit" && fields.size() == 2) schema.features.push_back(digit(fields[0]));
            else if (kind == "categorical" && fields.size() == 3) schema.features.push_back(categorical(fields[0], split(fields[2], ',')));
            else fail("bad feature kind or arity '" + fields[1] + "'");
        } else if (key == "target") {
            if (fields.size() != 3) fail("target needs '<task> | <column> | <levels>'");
            schema.targets.push_back({fields[0], fields[1], split(fields[2], ',')});
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    return out;
}

std::string render_schema_config(const std::vector<DatasetSchema>& schemas) {
    std::ostringstream out;
    for (std::size_t s = 0; s < schemas.size(); ++s) {
        if (s) out << '\n';
        out << '[' << to_string(schemas[s].id) << "]\n";
        for (const auto& f : schemas[s].features) {
            out << "feature = " << f.name << " | ";
            switch (f.kind) {
                case ColumnKind::Numeral: out << "numeral"; break;
                case ColumnKind::Digit: out << "digit"; break;
                case ColumnKind::Categorical: out << "categorical | " << join(f.levels, ", "); break;
            }
            out << '\n';
        }
        for (const auto& t : schemas[s].targets)
            out << "target = " << t.task_id << " | " << t.name << " | " << join(t.levels, ", ") << '\n';
    }
    return out.str();
}

}  // namespace sagechain
