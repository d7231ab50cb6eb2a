#pragma once

#include <stdexcept>
#include <string>

namespace agrlab {

// Base class for all library errors. Subclasses exist so callers (and the
// CLI exit-code mapping) can distinguish bad configuration from bad data
// from numerical failure.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/sequence dimension mismatch; message names the offending shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid configuration: bad hyperparameter, missing head, unknown key.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed or inconsistent input data (JSONL lines, annotations).
struct DataError : Error {
    using Error::Error;
};

// Token id outside the vocabulary.
struct VocabularyError : Error {
    using Error::Error;
};

// Label id outside the tag inventory.
struct LabelError : Error {
    using Error::Error;
};

// Unknown POS tag or missing annotation where one is required.
struct AnnotationError : Error {
    using Error::Error;
};

// Non-finite value where a finite one is required (loss, gradient).
struct NumericError : Error {
    using Error::Error;
};

// Checkpoint file carries an unsupported format_version.
struct CheckpointVersionError : Error {
    using Error::Error;
};

// Checkpoint file is syntactically or structurally malformed.
struct CheckpointFormatError : Error {
    using Error::Error;
};

// Ill-formed psycholinguistic template frame.
struct TemplateError : Error {
    using Error::Error;
};

// Checkpoint and data disagree (vocabulary hash, inventory size).
struct CompatibilityError : Error {
    using Error::Error;
};

// Index outside a valid range (e.g. hidden-unit index in the tracer).
struct RangeError : Error {
    using Error::Error;
};

}  // namespace agrlab
