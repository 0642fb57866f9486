#include "props/core/path.hpp"

#include <algorithm>
#include <charconv>

#include "props/core/error.hpp"

namespace props {

namespace {

bool index_of(const std::string& seg, std::size_t& idx) {
    if (seg.empty() || !std::all_of(seg.begin(), seg.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return false;
    auto res = std::from_chars(seg.data(), seg.data() + seg.size(), idx);
    return res.ec == std::errc{};
}

template <typename D>
D* step(D* node, const std::string& seg) {
    if (node->is_object()) return node->find(seg);
    if (node->is_array()) {
        std::size_t idx = 0;
        if (!index_of(seg, idx)) return nullptr;
        auto& arr = node->as_array();
        return idx < arr.size() ? &arr[idx] : nullptr;
    }
    return nullptr;
}

}  // namespace

ContentPath ContentPath::parse(std::string_view text) {
    ContentPath p;
    if (text.empty()) throw Error(Errc::ParamSchemaMismatch, "empty path");
    std::size_t start = 0;
    while (true) {
        std::size_t dot = text.find('.', start);
        std::string_view seg = text.substr(start, dot == std::string_view::npos ? text.npos : dot - start);
        if (seg.empty()) throw Error(Errc::ParamSchemaMismatch, "empty segment in path '" + std::string(text) + "'");
        p.segments.emplace_back(seg);
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return p;
}

std::string ContentPath::str() const {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out.push_back('.');
        out += segments[i];
    }
    return out;
}

const Doc* resolve(const Doc& root, const ContentPath& path) {
    const Doc* node = &root;
    for (const auto& seg : path.segments) {
        node = step(node, seg);
        if (!node) return nullptr;
    }
    return node;
}

Doc* resolve(Doc& root, const ContentPath& path) {
    Doc* node = &root;
    for (const auto& seg : path.segments) {
        node = step(node, seg);
        if (!node) return nullptr;
    }
    return node;
}

void copy_path(const Doc& src, const ContentPath& path, Doc& out) {
    const Doc* s = &src;
    Doc* o = &out;
    for (const auto& seg : path.segments) {
        const Doc* next = step(s, seg);
        if (!next) return;
        if (s->is_object()) {
            if (!o->is_object()) *o = Doc::object();
            Doc* child = o->find(seg);
            if (!child) child = &o->set(seg, Doc()).as_object().at(seg);
            o = child;
        } else {
            std::size_t idx = 0;
            index_of(seg, idx);
            if (!o->is_array()) *o = Doc::array();
            auto& arr = o->as_array();
            if (arr.size() <= idx) arr.resize(idx + 1);
            o = &arr[idx];
        }
        s = next;
    }
    *o = *s;
}

}  // namespace props
