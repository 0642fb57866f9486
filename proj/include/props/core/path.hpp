#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "props/core/canonical.hpp"

namespace props {

/// Content path: dot-separated object keys; an all-digit segment indexes an
/// array when the container at that point is an array. No wildcards.
struct ContentPath {
    std::vector<std::string> segments;

    /// Throws ParamSchemaMismatch on an empty path or empty segment.
    static ContentPath parse(std::string_view text);
    std::string str() const;
};

/// Resolves `path` inside `root`; nullptr when any step is missing.
const Doc* resolve(const Doc& root, const ContentPath& path);
Doc* resolve(Doc& root, const ContentPath& path);

/// Builds a tree holding only the value at `path` (with its enclosing
/// containers) and merges it into `out`. Array steps keep the element at
/// the same index, padding earlier slots with null.
void copy_path(const Doc& src, const ContentPath& path, Doc& out);

}  // namespace props
