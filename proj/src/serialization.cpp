#include "dualgap/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dualgap/errors.hpp"

namespace dualgap {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

void JsonWriter::comma() {
    if (!need_comma_.empty() && need_comma_.back() && !pending_key_) out_ += ',';
    if (!need_comma_.empty()) need_comma_.back() = true;
    pending_key_ = false;
}

JsonWriter& JsonWriter::begin_object() {
    comma();
    out_ += '{';
    need_comma_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::end_object() {
    out_ += '}';
    need_comma_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::begin_array() {
    comma();
    out_ += '[';
    need_comma_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::end_array() {
    out_ += ']';
    need_comma_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
    comma();
    out_ += '"';
    out_ += k;
    out_ += "\":";
    pending_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::value(double v) {
    comma();
    out_ += fmt17(v);
    return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
    comma();
    out_ += '"';
    for (char c : v) {
        switch (c) {
            case '"': out_ += "\\\""; break;
            case '\\': out_ += "\\\\"; break;
            case '\n': out_ += "\\n"; break;
            case '\t': out_ += "\\t"; break;
            default: out_ += c;
        }
    }
    out_ += '"';
    return *this;
}

JsonWriter& JsonWriter::value(const char* v) { return value(std::string(v)); }

JsonWriter& JsonWriter::value(bool v) {
    comma();
    out_ += v ? "true" : "false";
    return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
    comma();
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::value(std::size_t v) {
    comma();
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::value(const Matrix& m) {
    begin_object();
    key("rows").value(static_cast<std::size_t>(m.rows()));
    key("cols").value(static_cast<std::size_t>(m.cols()));
    key("entries").begin_array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) value(m(i, j));
    end_array();
    end_object();
    return *this;
}

JsonWriter& JsonWriter::value(const std::vector<double>& v) {
    begin_array();
    for (double x : v) value(x);
    end_array();
    return *this;
}

std::string matrix_to_csv(const Matrix& m) {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += fmt17(m(i, j));
        }
        out += '\n';
    }
    return out;
}

Matrix matrix_from_csv(const std::string& text) {
    std::vector<double> vals;
    std::size_t rows = 0, cols = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t row_cols = 0;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw config_error("csv: cannot parse number '" + cell + "'");
            }
            ++row_cols;
        }
        if (rows == 0)
            cols = row_cols;
        else if (row_cols != cols)
            throw config_error("csv: ragged rows");
        ++rows;
    }
    if (rows == 0) throw config_error("csv: no data rows");
    Matrix m = Matrix::from_rows(rows, cols, std::move(vals));
    if (!m.all_finite()) throw config_error("csv: non-finite entries");
    return m;
}

std::string matrix_to_json(const Matrix& m) {
    JsonWriter w;
    w.value(m);
    return w.str();
}

Matrix matrix_from_json_obj(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries"))
        throw config_error("matrix json: expected object with rows, cols, entries");
    std::size_t rows = j.at("rows").get<std::size_t>();
    std::size_t cols = j.at("cols").get<std::size_t>();
    std::vector<double> entries = j.at("entries").get<std::vector<double>>();
    if (entries.size() != rows * cols) throw config_error("matrix json: entry count mismatch");
    Matrix m = Matrix::from_rows(rows, cols, std::move(entries));
    if (!m.all_finite()) throw config_error("matrix json: non-finite entries");
    return m;
}

Matrix matrix_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw config_error(std::string("matrix json: parse failure: ") + e.what());
    }
    return matrix_from_json_obj(j);
}

void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw config_error("cannot open for write: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw config_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw config_error("rename failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace dualgap
