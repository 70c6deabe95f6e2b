#pragma once

#include <span>

namespace npspec::detail {

// In-place type-I DCT (FFTW REDFT00, unnormalized) of length n+1 >= 2.
// Thread-safe; plans are cached per length.
void dct1(std::span<double> data);

}  // namespace npspec::detail
