#include "sagechain/csv.hpp"

#include <stdexcept>

namespace sagechain {

bool CsvReader::next(std::vector<std::string>& record) {
    record.clear();
    if (at_start_) {
        at_start_ = false;
        if (in_.peek() == 0xEF) {
            char bom[3];
            in_.read(bom, 3);
            if (!(static_cast<unsigned char>(bom[1]) == 0xBB && static_cast<unsigned char>(bom[2]) == 0xBF)) {
                in_.seekg(0);
            }
        }
    }

    std::string field;
    bool in_quotes = false;
    bool any = false;
    int ch;
    while ((ch = in_.get()) != std::char_traits<char>::eof()) {
        const char c = static_cast<char>(ch);
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && in_.peek() == '\n') in_.get();
            if (record.empty() && field.empty()) {
                any = false;
                continue;
            }
            record.push_back(std::move(field));
            ++records_;
            return true;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw std::runtime_error("csv: unterminated quoted field at end of input");
    if (!any) return false;
    record.push_back(std::move(field));
    ++records_;
    return true;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    return out + "\"";
}

}  // namespace sagechain
