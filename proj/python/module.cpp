#include <pybind11/pybind11.h>

#include "subexp/special_functions.hpp"
#include "subexp/version.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_subexp, m) {
  m.attr("__version__") = subexp::version_string;
  m.def("log_gamma", &subexp::log_gamma);
  m.def("lambert_w_minus1", &subexp::lambert_w_minus1);
}
