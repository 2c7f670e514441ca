#pragma once

#include <stdexcept>
#include <string>

namespace haffsim {

/// Broad error classes; each maps to one process exit code in the CLI.
enum class ErrorClass {
    config = 2,
    geometry = 3,
    model = 4,
    numeric = 5,
    internal = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what)
        : std::runtime_error(what), cls_(cls) {}

    ErrorClass error_class() const noexcept { return cls_; }
    int exit_code() const noexcept { return static_cast<int>(cls_); }

private:
    ErrorClass cls_;
};

#define HAFFSIM_DEFINE_ERROR(Name, Cls)                                      \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {} \
    }

HAFFSIM_DEFINE_ERROR(ConfigError, config);
HAFFSIM_DEFINE_ERROR(ParseError, config);

HAFFSIM_DEFINE_ERROR(OverlapError, geometry);
HAFFSIM_DEFINE_ERROR(EmptyTableError, geometry);
HAFFSIM_DEFINE_ERROR(RangeError, geometry);
HAFFSIM_DEFINE_ERROR(CurveSpecError, geometry);

HAFFSIM_DEFINE_ERROR(ModelRangeError, model);
HAFFSIM_DEFINE_ERROR(ModelKindError, model);
HAFFSIM_DEFINE_ERROR(ConditionCError, model);
HAFFSIM_DEFINE_ERROR(InfeasibleError, model);

HAFFSIM_DEFINE_ERROR(GrazingError, numeric);
HAFFSIM_DEFINE_ERROR(QuadratureError, numeric);
HAFFSIM_DEFINE_ERROR(StepSizeError, numeric);
HAFFSIM_DEFINE_ERROR(SpeedFloorError, numeric);
HAFFSIM_DEFINE_ERROR(InsufficientDataError, numeric);
HAFFSIM_DEFINE_ERROR(GridMismatchError, numeric);

HAFFSIM_DEFINE_ERROR(HorizonViolation, internal);

#undef HAFFSIM_DEFINE_ERROR

/// Raised when a corridor (open channel) is found; the table has infinite horizon.
class InfiniteHorizonError : public Error {
public:
    InfiniteHorizonError(int p, int q, double offset, double width)
        : Error(ErrorClass::geometry, make_message(p, q, offset, width)),
          p_(p), q_(q), offset_(offset), width_(width) {}

    int p() const noexcept { return p_; }
    int q() const noexcept { return q_; }
    /// Normal offset of the corridor midline, measured along the unit normal (-q, p)/|(p,q)|.
    double offset() const noexcept { return offset_; }
    double width() const noexcept { return width_; }

private:
    static std::string make_message(int p, int q, double offset, double width);

    int p_, q_;
    double offset_, width_;
};

}  // namespace haffsim
