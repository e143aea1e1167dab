#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "localization.hpp"

namespace focklab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "fock-lab/1";

// Numbers: finite doubles as JSON numbers, non-finite ones as "inf" / "-inf" / "nan".
Json num(double x);
double to_double(const Json& j);

Json to_json(cplx z);
Json to_json(const CPoint& p);
Json to_json(const CMatrix& M);
Json to_json(const RealFn& f);
Json to_json(const PhiSpec& p);
Json to_json(const MeasureSpec& m);
Json to_json(const GammaSpec& g);
Json to_json(const OperatorSpec& op);
Json to_json(const DecayFit& f, const char* rate_name);
Json to_json(const WLProbe& w);
Json to_json(const VanishProbe& v);
Json to_json(const LocalizationReport& r);

cplx complex_from_json(const Json& j);
CPoint point_from_json(const Json& j);
CMatrix matrix_from_json(const Json& j);
RealFn realfn_from_json(const Json& j);
PhiSpec phi_from_json(const Json& j);
MeasureSpec measure_from_json(const Json& j);
GammaSpec gamma_from_json(const Json& j);
/// Throws SpecError on malformed input; "schema" may be omitted but must match when present.
OperatorSpec operator_from_json(const Json& j);
OperatorSpec operator_from_string(const std::string& text);

/// "x,y" for n = 1, "x1,y1;x2,y2" for n = 2.
CPoint parse_point(const std::string& text);

/// 16 hex digits of FNV-1a over the canonical operator JSON.
std::string param_hash(const OperatorSpec& op);

/// Summary verdict strings: p_localization, xz, sl, wl.
Json report_verdicts(const LocalizationReport& r);

struct CsvRow {
    std::string family;
    int n = 1;
    std::string param_hash;
    std::string diagnostic;
    std::string grid_value;
    std::string result;
    std::string classification;
};

inline const char* kCsvHeader = "family,n,param_hash,diagnostic,grid_value,result,classification";

std::string fmt_double(double x);
CsvRow make_row(const OperatorSpec& op, std::string diagnostic, std::string grid, double result, std::string cls);
std::vector<CsvRow> report_rows(const LocalizationReport& r);
void write_csv(std::ostream& os, const std::vector<CsvRow>& rows);

}  // namespace focklab
