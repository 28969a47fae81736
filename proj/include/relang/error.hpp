#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relang {

/// Source location, 1-based. A zero line means "unknown".
struct Position {
  std::uint32_t line = 0;
  std::uint32_t column = 0;

  friend bool operator==(const Position&, const Position&) = default;
};

enum class ErrorKind {
  // lexical / syntactic
  UnterminatedString,
  IllegalCharacter,
  SyntaxError,
  // catalog
  DuplicateName,
  UnknownType,
  SelfReference,
  UnknownRelation,
  // store
  ArityMismatch,
  DomainTypeMismatch,
  DanglingRef,
  MalformedKey,
  RowNotFound,
  ReferencedRow,
  DuplicateTuple,
  NotEnumerable,
  NotAlterable,
  // evaluation
  TypeError,
  UnknownName,
  UnknownAttr,
  NotARelation,
  BadCast,
  BadRegex,
  SchemaMismatch,
  ArithmeticError,
  NoConnection,
  AmbiguousPath,
  // transactions
  Rebind,
  NameCollision,
  IntegrityError,
  NoTransaction,
  // persistence
  SnapshotFormatError,
  DanglingOrdinal,
  IoError,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnterminatedString: return "UnterminatedString";
    case ErrorKind::IllegalCharacter: return "IllegalCharacter";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::UnknownType: return "UnknownType";
    case ErrorKind::SelfReference: return "SelfReference";
    case ErrorKind::UnknownRelation: return "UnknownRelation";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::DomainTypeMismatch: return "DomainTypeMismatch";
    case ErrorKind::DanglingRef: return "DanglingRef";
    case ErrorKind::MalformedKey: return "MalformedKey";
    case ErrorKind::RowNotFound: return "RowNotFound";
    case ErrorKind::ReferencedRow: return "ReferencedRow";
    case ErrorKind::DuplicateTuple: return "DuplicateTuple";
    case ErrorKind::NotEnumerable: return "NotEnumerable";
    case ErrorKind::NotAlterable: return "NotAlterable";
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::UnknownName: return "UnknownName";
    case ErrorKind::UnknownAttr: return "UnknownAttr";
    case ErrorKind::NotARelation: return "NotARelation";
    case ErrorKind::BadCast: return "BadCast";
    case ErrorKind::BadRegex: return "BadRegex";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ArithmeticError: return "ArithmeticError";
    case ErrorKind::NoConnection: return "NoConnection";
    case ErrorKind::AmbiguousPath: return "AmbiguousPath";
    case ErrorKind::Rebind: return "Rebind";
    case ErrorKind::NameCollision: return "NameCollision";
    case ErrorKind::IntegrityError: return "IntegrityError";
    case ErrorKind::NoTransaction: return "NoTransaction";
    case ErrorKind::SnapshotFormatError: return "SnapshotFormatError";
    case ErrorKind::DanglingOrdinal: return "DanglingOrdinal";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

/// The single exception type thrown by the engine. `kind()` is the stable
/// machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, Position pos = {})
      : std::runtime_error(message), kind_(kind), pos_(pos) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }
  const Position& position() const noexcept { return pos_; }

  /// Attaches a position if none is set yet.
  Error& at(Position pos) {
    if (pos_.line == 0) pos_ = pos;
    return *this;
  }

 private:
  ErrorKind kind_;
  Position pos_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message,
                              Position pos = {}) {
  throw Error(kind, message, pos);
}

}  // namespace relang
