#include "props/core/record.hpp"

#include <chrono>

#include "props/core/error.hpp"

namespace props {

UnixSeconds unix_now() {
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

Doc DataRecord::to_doc() const {
    return Doc{{"content", content},
               {"content_type", content_type},
               {"fetched_at", fetched_at},
               {"source_id", source_id},
               {"subject_id", subject_id}};
}

DataRecord DataRecord::from_doc(const Doc& doc) {
    ObjectReader r(doc, "record");
    DataRecord rec;
    rec.content = r.get("content");
    rec.content_type = r.string("content_type");
    rec.fetched_at = r.int64("fetched_at");
    rec.source_id = r.string("source_id");
    rec.subject_id = r.string("subject_id");
    r.finish();
    if (rec.fetched_at <= 0) throw Error(Errc::Malformed, "record: fetched_at must be positive");
    return rec;
}

}  // namespace props
