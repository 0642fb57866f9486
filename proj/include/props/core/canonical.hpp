#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "props/core/bytes.hpp"

namespace props {

class Doc;
using Array = std::vector<Doc>;
// std::less<std::string> compares like memcmp, which is the bytewise key order.
using Object = std::map<std::string, Doc>;

/// Float-free JSON value: the content model for records and for every proof
/// object's canonical form.
class Doc {
public:
    using Storage = std::variant<std::nullptr_t, bool, std::int64_t, std::string, Array, Object>;

    Doc() : v_(nullptr) {}
    Doc(std::nullptr_t) : v_(nullptr) {}
    Doc(bool b) : v_(b) {}
    Doc(int i) : v_(static_cast<std::int64_t>(i)) {}
    Doc(std::int64_t i) : v_(i) {}
    Doc(const char* s) : v_(std::string(s)) {}
    Doc(std::string s) : v_(std::move(s)) {}
    Doc(std::string_view s) : v_(std::string(s)) {}
    Doc(Array a) : v_(std::move(a)) {}
    Doc(Object o) : v_(std::move(o)) {}
    Doc(std::initializer_list<std::pair<const std::string, Doc>> init) : v_(Object(init)) {}

    static Doc object() { return Doc(Object{}); }
    static Doc array() { return Doc(Array{}); }

    bool is_null() const noexcept { return std::holds_alternative<std::nullptr_t>(v_); }
    bool is_bool() const noexcept { return std::holds_alternative<bool>(v_); }
    bool is_int() const noexcept { return std::holds_alternative<std::int64_t>(v_); }
    bool is_string() const noexcept { return std::holds_alternative<std::string>(v_); }
    bool is_array() const noexcept { return std::holds_alternative<Array>(v_); }
    bool is_object() const noexcept { return std::holds_alternative<Object>(v_); }

    // Typed accessors throw Error(Malformed) on a type mismatch.
    bool as_bool() const;
    std::int64_t as_int() const;
    const std::string& as_string() const;
    const Array& as_array() const;
    Array& as_array();
    const Object& as_object() const;
    Object& as_object();

    /// Object member lookup; nullptr when absent or when this is not an object.
    const Doc* find(std::string_view key) const;
    Doc* find(std::string_view key);
    /// Object member; throws Malformed when absent.
    const Doc& at(std::string_view key) const;
    /// Inserts or replaces an object member (converts null to an empty object).
    Doc& set(std::string key, Doc value);
    void push_back(Doc value);

    const Storage& storage() const noexcept { return v_; }

    friend bool operator==(const Doc&, const Doc&) = default;

private:
    Storage v_;
};

/// Unique byte encoding: sorted keys, no whitespace, integers only, UTF-8
/// strings with minimal escaping. Throws NonCanonicalValue on invalid UTF-8.
std::string canonical_encode(const Doc& doc);
inline Bytes canonical_bytes(const Doc& doc) { return to_bytes(canonical_encode(doc)); }

/// Parses any whitespace-tolerant JSON text in the float-free subset.
/// Floats, exponents, duplicate keys and invalid UTF-8 raise
/// NonCanonicalValue; other syntax errors raise ParseError.
Doc canonical_decode(std::string_view text);

/// Like canonical_decode but additionally requires `text` to already be in
/// canonical form (encode(decode(text)) == text); otherwise NonCanonicalValue.
Doc canonical_decode_strict(std::string_view text);

/// Indented, human-readable rendering of the same document. Parses back with
/// canonical_decode to an equal Doc.
std::string pretty_json(const Doc& doc, int indent = 2);

bool valid_utf8(std::string_view s) noexcept;

/// Strict schema reader: every accessed member is consumed and `finish()`
/// rejects leftover keys, so no unknown field slips through decoding.
class ObjectReader {
public:
    ObjectReader(const Doc& doc, std::string context);
    ObjectReader(Doc&&, std::string) = delete;  // would dangle

    const Doc& get(std::string_view key);
    const Doc* optional(std::string_view key);
    const std::string& string(std::string_view key);
    std::int64_t int64(std::string_view key);
    bool boolean(std::string_view key);
    const Array& array(std::string_view key);
    void finish() const;

private:
    const Object* obj_;
    std::string context_;
    std::vector<std::string> seen_;
};

}  // namespace props
