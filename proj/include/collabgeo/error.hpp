#pragma once

#include <stdexcept>
#include <string>

namespace collabgeo {

/// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-range coordinates, bad ellipsoid parameters.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Bad caller-supplied argument (inverted year range, k == 0, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Team has fewer than two unique affiliations.
class NotACollaboration : public Error {
public:
    using Error::Error;
};

/// Multi-affiliation team with at least one unresolved country.
class Unclassifiable : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Overlapping, gapped, or empty stage definitions.
class InvalidStage : public Error {
public:
    using Error::Error;
};

/// Boundary file could not be loaded.
class LoadError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace collabgeo
