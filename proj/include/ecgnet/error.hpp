#pragma once

#include <stdexcept>
#include <string>

namespace ecgnet {

// Root of every exception the library throws. The CLI maps subclasses onto
// exit codes (see tools/ecgnet.cpp).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Sampling rate outside what a DSP stage can handle.
class UnsupportedRateError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class NumericError : public Error {
public:
  using Error::Error;
};

// Anything wrong with data on disk or its contents.
class DataError : public Error {
public:
  using Error::Error;
};

class MissingFileError : public DataError {
public:
  using DataError::DataError;
};

class ChecksumError : public DataError {
public:
  using DataError::DataError;
};

class UnknownLabelError : public DataError {
public:
  using DataError::DataError;
};

class FormatError : public DataError {
public:
  using DataError::DataError;
};

} // namespace ecgnet
