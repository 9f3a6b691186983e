#include "gazelab/errors.hpp"

namespace gazelab {

Error::Error(std::string kind, const std::string& message)
    : std::runtime_error(kind + ": " + message), kind_(std::move(kind)), message_(message) {}

void throw_with_context(const Error& e, const std::string& context) {
    const std::string m = context + ": " + e.message();
#define GAZELAB_RETHROW(Name) \
    if (e.kind() == #Name) throw Name(m)
    GAZELAB_RETHROW(DegenerateDirection);
    GAZELAB_RETHROW(ParallelRay);
    GAZELAB_RETHROW(BehindOrigin);
    GAZELAB_RETHROW(ShapeMismatch);
    GAZELAB_RETHROW(NonScalarRoot);
    GAZELAB_RETHROW(NonFiniteValue);
    GAZELAB_RETHROW(EmptyDataset);
    GAZELAB_RETHROW(DivergenceDetected);
    GAZELAB_RETHROW(InvalidConfig);
    GAZELAB_RETHROW(VersionMismatch);
    GAZELAB_RETHROW(SchemaError);
    GAZELAB_RETHROW(TruncatedFile);
    GAZELAB_RETHROW(IoError);
#undef GAZELAB_RETHROW
    throw Error(e.kind(), m);
}

}  // namespace gazelab
