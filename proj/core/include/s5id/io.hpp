#pragma once

#include "s5id/ss_model.hpp"
#include "s5id/var1.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace s5id::io {

/// Model document: JSON object with the five system matrices as nested row
/// arrays, plus an optional "input_law". Doubles are written in shortest
/// round-trip form, so a write/read cycle is bit-exact.
std::string model_to_json(const StateSpaceModel& model, const Var1Model* input_law = nullptr);
StateSpaceModel model_from_json(const std::string& text, std::optional<Var1Model>* input_law = nullptr);

void write_model(const std::filesystem::path& path, const StateSpaceModel& model,
                 const Var1Model* input_law = nullptr);
StateSpaceModel read_model(const std::filesystem::path& path, std::optional<Var1Model>* input_law = nullptr);

/// Dataset CSV: header `t,u_1,..,u_m,y_1,..,y_d`, one row per sample, values
/// printed with %.17g. Parse failures throw ParseError with line and column.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);

void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// %.17g
std::string format_double(double value);

}  // namespace s5id::io
