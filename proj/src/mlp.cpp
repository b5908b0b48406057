#include "pkd/mlp.hpp"

namespace pkd {

template struct Mlp<double>;
template struct Mlp<float>;

}  // namespace pkd
