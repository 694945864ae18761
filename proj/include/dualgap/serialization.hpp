#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualgap/matrix.hpp"

namespace dualgap {

// All numeric text output goes through fmt17: 17 significant decimal digits,
// which round-trips IEEE doubles exactly and keeps reruns byte-identical.
std::string fmt17(double v);

// Minimal ordered JSON writer. Keys appear in insertion order and doubles are
// rendered with fmt17, which is the part nlohmann::json cannot pin down.
class JsonWriter {
public:
    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(const std::string& k);
    JsonWriter& value(double v);
    JsonWriter& value(const std::string& v);
    JsonWriter& value(const char* v);
    JsonWriter& value(bool v);
    JsonWriter& value(std::int64_t v);
    JsonWriter& value(std::size_t v);
    JsonWriter& value(const Matrix& m);
    JsonWriter& value(const std::vector<double>& v);

    std::string str() const { return out_; }

private:
    void comma();
    std::string out_;
    std::vector<bool> need_comma_;
    bool pending_key_ = false;
};

std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(const std::string& text);

std::string matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const std::string& text);

// Writes to a temp file in the destination directory, then renames over the
// target so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace dualgap
