#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "streetlight/decimal.hpp"

namespace streetlight::energy {

// Fleet energy and tariff arithmetic for city street lighting.
//
// Everything is exact decimal arithmetic. Rounding happens in two places
// only: a lamp's daily charge is settled to whole paisa (that is what a
// per-lamp bill carries), and display helpers round half-up to whole TK or
// to 0.1 MWh. Nothing rounded for display is ever fed back in.

enum class City { CCC, DNCC, DSCC, NCC };

inline constexpr std::array<City, 4> kAllCities = {City::CCC, City::DNCC, City::DSCC, City::NCC};

inline const char* to_string(City c) {
  switch (c) {
    case City::CCC: return "CCC";
    case City::DNCC: return "DNCC";
    case City::DSCC: return "DSCC";
    case City::NCC: return "NCC";
  }
  return "?";
}

inline City parse_city(const std::string& s) {
  for (City c : kAllCities)
    if (s == to_string(c)) return c;
  throw std::invalid_argument("unknown city corporation: " + s);
}

class EnergyModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class IncompatibleOption : public EnergyModelError {
 public:
  using EnergyModelError::EnergyModelError;
};
class MismatchedFleets : public EnergyModelError {
 public:
  using EnergyModelError::EnergyModelError;
};

enum class LampTechnology { Sodium, Led };

struct LampOption {
  std::string label;
  LampTechnology technology = LampTechnology::Led;
  Decimal rated_watts;
  int brightness_pct = 100;
};

inline LampOption sodium_100w() { return {"100 W sodium @100%", LampTechnology::Sodium, Decimal(100), 100}; }
inline LampOption led_40w(int brightness_pct) {
  return {"40 W LED @" + std::to_string(brightness_pct) + "%", LampTechnology::Led, Decimal(40), brightness_pct};
}

struct FleetProfile {
  City city = City::CCC;
  std::int64_t lamp_count = 0;
  bool sodium_installed = false;
};

// CCC counts its installed sodium stock; the others already run LED fleets.
inline FleetProfile fleet_profile(City c) {
  switch (c) {
    case City::CCC: return {c, 33750, true};
    case City::DNCC: return {c, 46410, false};
    case City::DSCC: return {c, 54966, false};
    case City::NCC: return {c, 2474, false};
  }
  throw std::invalid_argument("unknown city");
}

struct Tariff {
  Decimal rate_tk_per_kwh = Decimal::parse("7.70");
};

struct Calendar {
  Decimal hours_per_day = Decimal(12);
  int days_per_month = 30;
  int days_per_year = 365;
};

inline Decimal daily_energy_kwh(const Decimal& rated_watts, int brightness_pct, const Decimal& hours) {
  if (hours.is_negative()) throw std::invalid_argument("hours must be >= 0");
  return (rated_watts * Decimal(brightness_pct) * hours).shifted(5);  // /100 for %, /1000 for kW
}

inline Decimal daily_cost_tk(const Decimal& kwh, const Tariff& tariff) {
  if (kwh.is_negative()) throw std::invalid_argument("kwh must be >= 0");
  return kwh * tariff.rate_tk_per_kwh;
}

// Per-lamp daily charge settled to whole paisa, e.g. 3.696 -> 3.70.
inline Decimal lamp_daily_charge(const Decimal& kwh, const Tariff& tariff) {
  return daily_cost_tk(kwh, tariff).rounded(2);
}

inline Decimal fleet_daily_energy_mwh(std::int64_t lamp_count, const Decimal& per_lamp_kwh) {
  if (lamp_count <= 0) throw std::invalid_argument("lamp_count must be > 0");
  return (Decimal(lamp_count) * per_lamp_kwh).shifted(3);
}

inline std::string display_mwh(const Decimal& mwh) { return mwh.to_fixed(1); }
inline std::string display_tk(const Decimal& tk) { return tk.to_grouped(0); }

struct CostTable {
  City city = City::CCC;
  std::string option_label;
  Decimal hours_per_day;
  Decimal per_lamp_kwh;
  Decimal fleet_mwh;
  Decimal per_lamp_cost;    // exact kwh * tariff
  Decimal per_lamp_charge;  // settled to paisa
  // Fleet amounts from the settled per-lamp charge.
  Decimal per_day;
  Decimal per_month;
  Decimal per_year;
  // Fleet amounts from the exact per-lamp cost.
  Decimal exact_per_day;
  Decimal exact_per_month;
  Decimal exact_per_year;
};

inline CostTable cost_table(const FleetProfile& fleet, const LampOption& option, const Tariff& tariff,
                            const Calendar& cal = {}) {
  if (option.technology == LampTechnology::Sodium && !fleet.sodium_installed)
    throw IncompatibleOption(std::string("no sodium streetlights installed in ") + to_string(fleet.city));
  if (option.rated_watts <= Decimal(0)) throw std::invalid_argument("rated watts must be > 0");
  CostTable t;
  t.city = fleet.city;
  t.option_label = option.label;
  t.hours_per_day = cal.hours_per_day;
  t.per_lamp_kwh = daily_energy_kwh(option.rated_watts, option.brightness_pct, cal.hours_per_day);
  t.fleet_mwh = fleet_daily_energy_mwh(fleet.lamp_count, t.per_lamp_kwh);
  t.per_lamp_cost = daily_cost_tk(t.per_lamp_kwh, tariff);
  t.per_lamp_charge = t.per_lamp_cost.rounded(2);
  const Decimal count(fleet.lamp_count);
  t.per_day = count * t.per_lamp_charge;
  t.per_month = t.per_day * Decimal(cal.days_per_month);
  t.per_year = t.per_day * Decimal(cal.days_per_year);
  t.exact_per_day = count * t.per_lamp_cost;
  t.exact_per_month = t.exact_per_day * Decimal(cal.days_per_month);
  t.exact_per_year = t.exact_per_day * Decimal(cal.days_per_year);
  return t;
}

struct Savings {
  Decimal per_day;
  Decimal per_month;
  Decimal per_year;
  Decimal fleet_mwh;
  Decimal pct_energy;  // 6 fractional digits
};

inline Savings savings(const CostTable& base, const CostTable& alt) {
  if (base.city != alt.city || base.hours_per_day != alt.hours_per_day)
    throw MismatchedFleets("savings compares tables of different fleets or operating hours");
  Savings s;
  s.per_day = base.per_day - alt.per_day;
  s.per_month = base.per_month - alt.per_month;
  s.per_year = base.per_year - alt.per_year;
  s.fleet_mwh = base.fleet_mwh - alt.fleet_mwh;
  s.pct_energy = base.fleet_mwh.is_zero() ? Decimal(0) : (s.fleet_mwh * Decimal(100)).divided(base.fleet_mwh, 6);
  return s;
}

struct BlendedDay {
  Decimal kwh_per_lamp;
  Decimal fleet_mwh;
  // Time-weighted mix of the settled full-brightness and dimmed per-lamp
  // charges, so the blend interpolates the fleet cost table rows.
  Decimal cost;
  Decimal exact_cost;  // fleet kWh * tariff
};

inline BlendedDay blended_daily(const FleetProfile& fleet, const Decimal& rated_watts, const Decimal& full_hours,
                                const Decimal& dim_hours, int dim_pct, const Tariff& tariff) {
  if (full_hours.is_negative() || dim_hours.is_negative()) throw std::invalid_argument("hours must be >= 0");
  const Decimal active = full_hours + dim_hours;
  BlendedDay b;
  b.kwh_per_lamp = daily_energy_kwh(rated_watts, 100, full_hours) + daily_energy_kwh(rated_watts, dim_pct, dim_hours);
  b.fleet_mwh = fleet_daily_energy_mwh(fleet.lamp_count, b.kwh_per_lamp);
  b.exact_cost = b.fleet_mwh * Decimal(1000) * tariff.rate_tk_per_kwh;
  if (active.is_zero()) {
    b.cost = Decimal(0);
    return b;
  }
  const Decimal full_charge = lamp_daily_charge(daily_energy_kwh(rated_watts, 100, active), tariff);
  const Decimal dim_charge = lamp_daily_charge(daily_energy_kwh(rated_watts, dim_pct, active), tariff);
  const Decimal weighted = full_hours * full_charge + dim_hours * dim_charge;
  b.cost = (Decimal(fleet.lamp_count) * weighted).divided(active, 6);
  return b;
}

}  // namespace streetlight::energy
