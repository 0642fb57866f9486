#include "props/core/canonical.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

#include "props/core/error.hpp"

namespace props {

namespace {

[[noreturn]] void type_error(const char* want) {
    throw Error(Errc::Malformed, std::string("expected ") + want);
}

}  // namespace

bool Doc::as_bool() const {
    if (auto* p = std::get_if<bool>(&v_)) return *p;
    type_error("boolean");
}
std::int64_t Doc::as_int() const {
    if (auto* p = std::get_if<std::int64_t>(&v_)) return *p;
    type_error("integer");
}
const std::string& Doc::as_string() const {
    if (auto* p = std::get_if<std::string>(&v_)) return *p;
    type_error("string");
}
const Array& Doc::as_array() const {
    if (auto* p = std::get_if<Array>(&v_)) return *p;
    type_error("array");
}
Array& Doc::as_array() {
    if (auto* p = std::get_if<Array>(&v_)) return *p;
    type_error("array");
}
const Object& Doc::as_object() const {
    if (auto* p = std::get_if<Object>(&v_)) return *p;
    type_error("object");
}
Object& Doc::as_object() {
    if (auto* p = std::get_if<Object>(&v_)) return *p;
    type_error("object");
}

const Doc* Doc::find(std::string_view key) const {
    auto* obj = std::get_if<Object>(&v_);
    if (!obj) return nullptr;
    auto it = obj->find(std::string(key));
    return it == obj->end() ? nullptr : &it->second;
}

Doc* Doc::find(std::string_view key) {
    auto* obj = std::get_if<Object>(&v_);
    if (!obj) return nullptr;
    auto it = obj->find(std::string(key));
    return it == obj->end() ? nullptr : &it->second;
}

const Doc& Doc::at(std::string_view key) const {
    const Doc* d = find(key);
    if (!d) throw Error(Errc::Malformed, "missing member '" + std::string(key) + "'");
    return *d;
}

Doc& Doc::set(std::string key, Doc value) {
    if (is_null()) v_ = Object{};
    auto& obj = as_object();
    obj.insert_or_assign(std::move(key), std::move(value));
    return *this;
}

void Doc::push_back(Doc value) {
    if (is_null()) v_ = Array{};
    as_array().push_back(std::move(value));
}

bool valid_utf8(std::string_view s) noexcept {
    std::size_t i = 0;
    const auto* p = reinterpret_cast<const unsigned char*>(s.data());
    const std::size_t n = s.size();
    while (i < n) {
        unsigned char c = p[i];
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        std::uint32_t cp;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            if ((p[i + k] & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (p[i + k] & 0x3F);
        }
        // Overlong forms, surrogates and out-of-range code points.
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
            return false;
        i += len;
    }
    return true;
}

namespace {

void encode_string(std::string& out, const std::string& s) {
    if (!valid_utf8(s)) throw Error(Errc::NonCanonicalValue, "string is not valid UTF-8");
    static constexpr char kHex[] = "0123456789abcdef";
    out.push_back('"');
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    out += "\\u00";
                    out.push_back(kHex[c >> 4]);
                    out.push_back(kHex[c & 0x0f]);
                } else {
                    out.push_back(ch);
                }
        }
    }
    out.push_back('"');
}

void encode_into(std::string& out, const Doc& doc) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::nullptr_t>) {
                out += "null";
            } else if constexpr (std::is_same_v<T, bool>) {
                out += v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                char buf[24];
                auto res = std::to_chars(buf, buf + sizeof buf, v);
                out.append(buf, res.ptr);
            } else if constexpr (std::is_same_v<T, std::string>) {
                encode_string(out, v);
            } else if constexpr (std::is_same_v<T, Array>) {
                out.push_back('[');
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out.push_back(',');
                    encode_into(out, v[i]);
                }
                out.push_back(']');
            } else {
                out.push_back('{');
                bool first = true;
                for (const auto& [k, child] : v) {
                    if (!first) out.push_back(',');
                    first = false;
                    encode_string(out, k);
                    out.push_back(':');
                    encode_into(out, child);
                }
                out.push_back('}');
            }
        },
        doc.storage());
}

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Doc parse_document() {
        Doc d = parse_value(0);
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters");
        return d;
    }

private:
    static constexpr int kMaxDepth = 256;

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(Errc::ParseError, what + " at offset " + std::to_string(pos_));
    }
    [[noreturn]] void noncanonical(const std::string& what) const {
        throw Error(Errc::NonCanonicalValue, what + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() &&
               (s_[pos_] == ' ' || s_[pos_] == '\n' || s_[pos_] == '\r' || s_[pos_] == '\t'))
            ++pos_;
    }

    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void expect_literal(std::string_view lit) {
        if (s_.substr(pos_, lit.size()) != lit) fail("invalid literal");
        pos_ += lit.size();
    }

    Doc parse_value(int depth) {
        if (depth > kMaxDepth) fail("nesting too deep");
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        switch (c) {
            case '{': return parse_object(depth);
            case '[': return parse_array(depth);
            case '"': return Doc(parse_string());
            case 't': expect_literal("true"); return Doc(true);
            case 'f': expect_literal("false"); return Doc(false);
            case 'n': expect_literal("null"); return Doc(nullptr);
            default:
                if (c == '-' || (c >= '0' && c <= '9')) return parse_number();
                fail("unexpected character");
        }
    }

    Doc parse_number() {
        std::size_t start = pos_;
        if (peek() == '-') ++pos_;
        if (!(peek() >= '0' && peek() <= '9')) fail("invalid number");
        if (peek() == '0') {
            ++pos_;
            if (peek() >= '0' && peek() <= '9') fail("leading zero");
        } else {
            while (peek() >= '0' && peek() <= '9') ++pos_;
        }
        if (peek() == '.' || peek() == 'e' || peek() == 'E') noncanonical("floating-point value");
        std::int64_t value = 0;
        auto res = std::from_chars(s_.data() + start, s_.data() + pos_, value);
        if (res.ec != std::errc{} || res.ptr != s_.data() + pos_)
            noncanonical("integer out of 64-bit range");
        return Doc(value);
    }

    unsigned parse_hex4() {
        if (pos_ + 4 > s_.size()) fail("truncated \\u escape");
        unsigned v = 0;
        for (int i = 0; i < 4; ++i) {
            char c = s_[pos_++];
            v <<= 4;
            if (c >= '0' && c <= '9') v |= c - '0';
            else if (c >= 'a' && c <= 'f') v |= c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') v |= c - 'A' + 10;
            else fail("invalid \\u escape");
        }
        return v;
    }

    static void append_utf8(std::string& out, std::uint32_t cp) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }

    std::string parse_string() {
        ++pos_;  // opening quote
        std::string out;
        while (true) {
            if (pos_ >= s_.size()) fail("unterminated string");
            char c = s_[pos_++];
            if (c == '"') break;
            if (static_cast<unsigned char>(c) < 0x20) fail("raw control character in string");
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (pos_ >= s_.size()) fail("truncated escape");
            char e = s_[pos_++];
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case '/': out.push_back('/'); break;
                case 'b': out.push_back('\b'); break;
                case 'f': out.push_back('\f'); break;
                case 'n': out.push_back('\n'); break;
                case 'r': out.push_back('\r'); break;
                case 't': out.push_back('\t'); break;
                case 'u': {
                    std::uint32_t cp = parse_hex4();
                    if (cp >= 0xD800 && cp <= 0xDBFF) {
                        if (s_.substr(pos_, 2) != "\\u") noncanonical("lone high surrogate");
                        pos_ += 2;
                        unsigned lo = parse_hex4();
                        if (lo < 0xDC00 || lo > 0xDFFF) noncanonical("invalid surrogate pair");
                        cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
                    } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
                        noncanonical("lone low surrogate");
                    }
                    append_utf8(out, cp);
                    break;
                }
                default: fail("invalid escape");
            }
        }
        if (!valid_utf8(out)) noncanonical("string is not valid UTF-8");
        return out;
    }

    Doc parse_array(int depth) {
        ++pos_;
        Array arr;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
            return Doc(std::move(arr));
        }
        while (true) {
            arr.push_back(parse_value(depth + 1));
            skip_ws();
            char c = peek();
            if (c == ',') {
                ++pos_;
            } else if (c == ']') {
                ++pos_;
                return Doc(std::move(arr));
            } else {
                fail("expected ',' or ']'");
            }
        }
    }

    Doc parse_object(int depth) {
        ++pos_;
        Object obj;
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return Doc(std::move(obj));
        }
        while (true) {
            skip_ws();
            if (peek() != '"') fail("expected object key");
            std::string key = parse_string();
            skip_ws();
            if (peek() != ':') fail("expected ':'");
            ++pos_;
            Doc value = parse_value(depth + 1);
            if (!obj.emplace(std::move(key), std::move(value)).second) noncanonical("duplicate key");
            skip_ws();
            char c = peek();
            if (c == ',') {
                ++pos_;
            } else if (c == '}') {
                ++pos_;
                return Doc(std::move(obj));
            } else {
                fail("expected ',' or '}'");
            }
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

void pretty_into(std::string& out, const Doc& doc, int indent, int level) {
    auto newline = [&](int lvl) {
        out.push_back('\n');
        out.append(static_cast<std::size_t>(indent * lvl), ' ');
    };
    if (doc.is_array() && !doc.as_array().empty()) {
        const auto& arr = doc.as_array();
        out.push_back('[');
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (i) out.push_back(',');
            newline(level + 1);
            pretty_into(out, arr[i], indent, level + 1);
        }
        newline(level);
        out.push_back(']');
    } else if (doc.is_object() && !doc.as_object().empty()) {
        out.push_back('{');
        bool first = true;
        for (const auto& [k, v] : doc.as_object()) {
            if (!first) out.push_back(',');
            first = false;
            newline(level + 1);
            encode_string(out, k);
            out += ": ";
            pretty_into(out, v, indent, level + 1);
        }
        newline(level);
        out.push_back('}');
    } else {
        encode_into(out, doc);
    }
}

}  // namespace

std::string canonical_encode(const Doc& doc) {
    std::string out;
    encode_into(out, doc);
    return out;
}

Doc canonical_decode(std::string_view text) {
    if (!valid_utf8(text)) throw Error(Errc::NonCanonicalValue, "input is not valid UTF-8");
    return Parser(text).parse_document();
}

Doc canonical_decode_strict(std::string_view text) {
    Doc d = canonical_decode(text);
    if (canonical_encode(d) != text) throw Error(Errc::NonCanonicalValue, "input is not in canonical form");
    return d;
}

std::string pretty_json(const Doc& doc, int indent) {
    std::string out;
    pretty_into(out, doc, indent, 0);
    out.push_back('\n');
    return out;
}

ObjectReader::ObjectReader(const Doc& doc, std::string context)
    : obj_(doc.is_object() ? &doc.as_object() : nullptr), context_(std::move(context)) {
    if (!obj_) throw Error(Errc::Malformed, context_ + ": expected object");
}

const Doc* ObjectReader::optional(std::string_view key) {
    auto it = obj_->find(std::string(key));
    if (it == obj_->end()) return nullptr;
    seen_.emplace_back(key);
    return &it->second;
}

const Doc& ObjectReader::get(std::string_view key) {
    const Doc* d = optional(key);
    if (!d) throw Error(Errc::Malformed, context_ + ": missing '" + std::string(key) + "'");
    return *d;
}

const std::string& ObjectReader::string(std::string_view key) { return get(key).as_string(); }
std::int64_t ObjectReader::int64(std::string_view key) { return get(key).as_int(); }
bool ObjectReader::boolean(std::string_view key) { return get(key).as_bool(); }
const Array& ObjectReader::array(std::string_view key) { return get(key).as_array(); }

void ObjectReader::finish() const {
    for (const auto& [k, v] : *obj_) {
        if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
            throw Error(Errc::Malformed, context_ + ": unexpected member '" + k + "'");
    }
}

}  // namespace props
