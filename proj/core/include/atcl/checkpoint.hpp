#ifndef ATCL_CHECKPOINT_HPP
#define ATCL_CHECKPOINT_HPP

#include <string>

#include "atcl/transformer.hpp"

namespace atcl {

// Checkpoint layout: magic "ATCL1\n", one "name dim0 dim1 ..." header line
// per parameter in canonical order, a "data\n" separator, then the raw
// little-endian 64-bit reals back to back. Loading verifies names and shapes
// bit-exactly against the model.
void save_checkpoint(const TransformerModel& model, const std::string& path);
void load_checkpoint(TransformerModel& model, const std::string& path);

} // namespace atcl

#endif
