/* Copyright 2026 The lgvqa Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace lgvqa {

// Root of every error raised by the library. Subsystems throw the most
// specific subclass; callers that only need a coarse category (the CLI maps
// categories to exit codes) catch DataError / ConfigError.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid combination of options, modes, or backends.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Instance validation.
class ChoiceCountError : public DataError { public: using DataError::DataError; };
class GoldIndexError : public DataError { public: using DataError::DataError; };
class DuplicateChoiceError : public DataError { public: using DataError::DataError; };
class SchemaError : public DataError { public: using DataError::DataError; };
class GuidanceConflictError : public DataError { public: using DataError::DataError; };

// Backends.
class EmptyTextError : public DataError { public: using DataError::DataError; };
class ImageResolveError : public DataError { public: using DataError::DataError; };
class DimMismatchError : public Error { public: using Error::Error; };
class ShrinkError : public ConfigError { public: using ConfigError::ConfigError; };
class CheckpointError : public DataError { public: using DataError::DataError; };

// Scoring.
class EmptyFieldError : public DataError { public: using DataError::DataError; };
class MissingGuidanceError : public ConfigError { public: using ConfigError::ConfigError; };
class ModeBackendMismatchError : public ConfigError { public: using ConfigError::ConfigError; };
class AllMaskedError : public Error { public: using Error::Error; };

// Guidance.
class EmptyDetectionError : public DataError { public: using DataError::DataError; };
class NoGuidanceAvailableError : public DataError { public: using DataError::DataError; };
class CacheIOError : public DataError { public: using DataError::DataError; };
class CacheConflictError : public DataError { public: using DataError::DataError; };
class GenerationInputError : public DataError { public: using DataError::DataError; };

// Training.
class MaskedGoldError : public Error { public: using Error::Error; };
class EmptyDatasetError : public DataError { public: using DataError::DataError; };

// Reports.
class EmptyPredictionsError : public DataError { public: using DataError::DataError; };
class IdSetMismatchError : public DataError { public: using DataError::DataError; };
class SliceMismatchError : public DataError { public: using DataError::DataError; };

}  // namespace lgvqa
