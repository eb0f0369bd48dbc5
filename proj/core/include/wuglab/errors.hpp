#pragma once

#include <stdexcept>
#include <string>

namespace wuglab {

// Base class for everything this library throws on contract violations.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error { using Error::Error; };

// wug_forge
struct GenerationExhausted : Error { using Error::Error; };

// template_engine
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct BalanceUnsatisfiable : Error { using Error::Error; };
struct DuplicateExhaustion : Error { using Error::Error; };
struct BankTooSmall : Error { using Error::Error; };

// tokenizer
struct CorpusTooSmall : Error { using Error::Error; };
struct UnknownId : Error { using Error::Error; };

// mlm
struct SequenceTooLong : Error { using Error::Error; };
struct NoLabeledPositions : Error { using Error::Error; };

// evaluator
struct EmptySentence : Error { using Error::Error; };
struct SpanNotFound : Error { using Error::Error; };

// exp_runner
struct InsufficientSeeds : Error { using Error::Error; };

} // namespace wuglab
