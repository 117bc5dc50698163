/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/errors.hpp
 *
 * Copyright 2026 The isr authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace isr {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad arguments or violated preconditions (CLI exit code 1).
struct ValidationError : Error {
    using Error::Error;
};

/// File system and format problems (CLI exit code 2).
struct IoError : Error {
    using Error::Error;
};

/// Non-finite values and other numeric failures (CLI exit code 3).
struct NumericError : Error {
    using Error::Error;
};

} // namespace isr
