// error.hpp
//
// Copyright 2026  Voxaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace voxaug {

// Base class for every error the toolkit throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define VOXAUG_DEFINE_ERROR(Name)                \
  struct Name : Error {                          \
    using Error::Error;                          \
  }

// I/O and format errors.
VOXAUG_DEFINE_ERROR(IoFailure);
VOXAUG_DEFINE_ERROR(CorruptHeader);
VOXAUG_DEFINE_ERROR(UnsupportedFormat);
VOXAUG_DEFINE_ERROR(UnreadableFile);
VOXAUG_DEFINE_ERROR(EmptyDirectory);

// Argument and state errors.
VOXAUG_DEFINE_ERROR(InvalidParams);
VOXAUG_DEFINE_ERROR(EmptyBuffer);
VOXAUG_DEFINE_ERROR(EmptyAudio);
VOXAUG_DEFINE_ERROR(TooShort);
VOXAUG_DEFINE_ERROR(FrameTooShort);
VOXAUG_DEFINE_ERROR(InvalidShift);
VOXAUG_DEFINE_ERROR(SilentInput);
VOXAUG_DEFINE_ERROR(SampleRateMismatch);
VOXAUG_DEFINE_ERROR(MissingNoiseBank);
VOXAUG_DEFINE_ERROR(UninitializedState);
VOXAUG_DEFINE_ERROR(TargetExceedsTotal);
VOXAUG_DEFINE_ERROR(WorkloadFailure);

#undef VOXAUG_DEFINE_ERROR

}  // namespace voxaug
