#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace termshift {

// Minimal RFC-4180-style CSV: quoted fields may contain commas, newlines
// and doubled quotes. Reader strips a UTF-8 BOM on the first row.
class CsvReader {
  public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Returns false at end of input. Throws on an unterminated quote.
    bool next_row(std::vector<std::string>& fields) {
        fields.clear();
        int c = in_.get();
        if (c == EOF) return false;
        std::string field;
        bool quoted = false;
        ++row_;
        while (true) {
            if (c == EOF) {
                if (quoted) throw std::runtime_error("csv: unterminated quote at row " + std::to_string(row_));
                fields.push_back(std::move(field));
                strip_bom(fields);
                return true;
            }
            char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        field.push_back('"');
                        in_.get();
                    } else {
                        quoted = false;
                    }
                } else {
                    field.push_back(ch);
                }
            } else if (ch == '"' && field.empty()) {
                quoted = true;
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (ch == '\n') {
                fields.push_back(std::move(field));
                strip_bom(fields);
                return true;
            } else if (ch == '\r') {
                // swallow; handled by following '\n' or EOF
            } else {
                field.push_back(ch);
            }
            c = in_.get();
        }
    }

    size_t row() const { return row_; }

  private:
    void strip_bom(std::vector<std::string>& fields) {
        if (row_ == 1 && !fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0)
            fields[0].erase(0, 3);
    }

    std::istream& in_;
    size_t row_ = 0;
};

inline std::string csv_escape(const std::string& field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(fields[i]);
    }
    out << '\n';
}

}  // namespace termshift
