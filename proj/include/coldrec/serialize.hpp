#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "coldrec/cmf.hpp"
#include "coldrec/offsets.hpp"

namespace coldrec {

// Binary model container: magic, version, kind discriminator, dimensions and
// partition sizes, link metadata for the attribute inputs, then the parameter
// blocks as row-major little-endian doubles. Loading reproduces every
// parameter bit-exactly.

using AnyModel = std::variant<CmfModel, OffsetsModel>;

void save_model(const CmfModel& model, std::ostream& out);
void save_model(const OffsetsModel& model, std::ostream& out);
void save_model_file(const AnyModel& model, const std::string& path);

AnyModel load_model(std::istream& in);
AnyModel load_model_file(const std::string& path);

}  // namespace coldrec
