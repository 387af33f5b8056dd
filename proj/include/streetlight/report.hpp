#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "streetlight/energy_model.hpp"

namespace streetlight::report {

using namespace streetlight::energy;

enum class Scenario { Sodium, Led100, Led50, All, Blended };
enum class Format { Table, Csv, ChartData };

inline Scenario parse_scenario(const std::string& s) {
  if (s == "sodium") return Scenario::Sodium;
  if (s == "led100") return Scenario::Led100;
  if (s == "led50") return Scenario::Led50;
  if (s == "all") return Scenario::All;
  if (s == "blended") return Scenario::Blended;
  throw std::invalid_argument("scenario must be sodium, led100, led50, all or blended");
}

inline Format parse_format(const std::string& s) {
  if (s == "table") return Format::Table;
  if (s == "csv") return Format::Csv;
  if (s == "chart-data") return Format::ChartData;
  throw std::invalid_argument("format must be table, csv or chart-data");
}

struct ReportRequest {
  std::vector<City> cities = {kAllCities.begin(), kAllCities.end()};
  Scenario scenario = Scenario::All;
  Format format = Format::Table;
  Tariff tariff;
  Calendar calendar;
  Decimal full_hours = Decimal(6);
  Decimal dim_hours = Decimal(6);
  int dim_pct = 50;
};

// Figures in the reference tables that differ from exact arithmetic. Each
// is reported next to the computed value, never substituted for it.
struct KnownDiscrepancy {
  City city;
  std::string what;
  std::string reference;
  std::string computed;
};

namespace detail {

inline std::vector<LampOption> options_for(const ReportRequest& r) {
  switch (r.scenario) {
    case Scenario::Sodium: return {sodium_100w()};
    case Scenario::Led100: return {led_40w(100)};
    case Scenario::Led50: return {led_40w(50)};
    case Scenario::All: return {sodium_100w(), led_40w(100), led_40w(50)};
    case Scenario::Blended: return {led_40w(100), led_40w(r.dim_pct)};
  }
  return {};
}

inline bool applicable(const FleetProfile& f, const LampOption& o) {
  return o.technology != LampTechnology::Sodium || f.sodium_installed;
}

inline std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], r[i].size());
    }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto pad = std::string(width[i] - r[i].size(), ' ');
      line += i == 0 ? r[i] + pad : "  " + pad + r[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline std::string blend_label(const ReportRequest& r) {
  return "40 W LED " + r.full_hours.to_string() + " h @100% + " + r.dim_hours.to_string() + " h @" +
         std::to_string(r.dim_pct) + "%";
}

}  // namespace detail

inline std::vector<KnownDiscrepancy> discrepancies(const Tariff& tariff, const Calendar& cal) {
  std::vector<KnownDiscrepancy> out;
  const auto ccc = fleet_profile(City::CCC);
  const auto save = savings(cost_table(ccc, sodium_100w(), tariff, cal), cost_table(ccc, led_40w(100), tariff, cal));
  out.push_back({City::CCC, "yearly saving, sodium -> 40 W LED @100% (TK)", "68,246,125", display_tk(save.per_year)});
  const auto dncc = fleet_profile(City::DNCC);
  out.push_back({City::DNCC, "fleet energy, 40 W LED @50% (MWh/day)", "11.15",
                 display_mwh(cost_table(dncc, led_40w(50), tariff, cal).fleet_mwh)});
  return out;
}

// Throws IncompatibleOption when a single-option request names an option a
// city does not have (sodium outside CCC).
inline std::string render(const ReportRequest& req) {
  if (req.cities.empty()) throw std::invalid_argument("no city selected");
  if (req.dim_pct < 1 || req.dim_pct > 100) throw std::invalid_argument("dim percentage must be 1..100");
  if (!(Decimal(0) < req.tariff.rate_tk_per_kwh)) throw std::invalid_argument("tariff must be > 0");
  if (req.scenario == Scenario::Sodium)
    for (auto c : req.cities)
      if (!fleet_profile(c).sodium_installed)
        throw IncompatibleOption(std::string("the sodium scenario does not apply to ") + to_string(c) +
                                 ": it has no sodium lamps installed");

  const auto options = detail::options_for(req);
  const bool blended = req.scenario == Scenario::Blended;
  const std::string tariff_text = req.tariff.rate_tk_per_kwh.to_fixed(2);

  // Per city, per option tables.
  std::map<City, std::vector<CostTable>> tables;
  std::map<City, std::optional<Savings>> saved;
  std::map<City, BlendedDay> blends;
  for (auto c : req.cities) {
    const auto fleet = fleet_profile(c);
    for (const auto& o : options)
      if (detail::applicable(fleet, o)) tables[c].push_back(cost_table(fleet, o, req.tariff, req.calendar));
    if (req.scenario == Scenario::All && fleet.sodium_installed) saved[c] = savings(tables[c][0], tables[c][1]);
    if (blended)
      blends[c] = blended_daily(fleet, Decimal(40), req.full_hours, req.dim_hours, req.dim_pct, req.tariff);
  }
  std::vector<KnownDiscrepancy> notes;
  for (const auto& d : discrepancies(req.tariff, req.calendar)) {
    if (!tables.count(d.city)) continue;
    if (d.city == City::CCC && saved[City::CCC] && req.tariff.rate_tk_per_kwh == Tariff{}.rate_tk_per_kwh &&
        req.calendar.days_per_year == 365 && req.calendar.hours_per_day == Decimal(12))
      notes.push_back(d);
    if (d.city == City::DNCC && req.calendar.hours_per_day == Decimal(12))
      for (const auto& t : tables[City::DNCC])
        if (t.option_label == led_40w(50).label) notes.push_back(d);
  }

  std::ostringstream out;
  if (req.format == Format::Csv) {
    out << "city,option,lamps,hours_per_day,per_lamp_kwh,fleet_mwh_per_day,per_lamp_charge_tk,per_day_tk,per_month_tk,"
           "per_year_tk,exact_per_day_tk,exact_per_year_tk\n";
    for (const auto& [c, list] : tables) {
      const auto lamps = std::to_string(fleet_profile(c).lamp_count);
      for (const auto& t : list)
        out << to_string(c) << "," << detail::csv_field(t.option_label) << "," << lamps << ","
            << t.hours_per_day.to_string() << "," << t.per_lamp_kwh.to_string() << "," << t.fleet_mwh.to_string() << ","
            << t.per_lamp_charge.to_string() << "," << t.per_day.to_string() << "," << t.per_month.to_string() << ","
            << t.per_year.to_string() << "," << t.exact_per_day.to_string() << "," << t.exact_per_year.to_string()
            << "\n";
      if (const auto& s = saved[c])
        out << to_string(c) << "," << detail::csv_field("save: " + list[0].option_label + " -> " + list[1].option_label)
            << "," << lamps << "," << list[0].hours_per_day.to_string() << ",,"
            << s->fleet_mwh.to_string() << ",," << s->per_day.to_string() << "," << s->per_month.to_string() << ","
            << s->per_year.to_string() << ",,\n";
      if (blended) {
        const auto& b = blends.at(c);
        out << to_string(c) << "," << detail::csv_field(detail::blend_label(req)) << "," << lamps << ","
            << (req.full_hours + req.dim_hours).to_string() << "," << b.kwh_per_lamp.to_string() << ","
            << b.fleet_mwh.to_string() << ",," << b.cost.to_string() << ",,,"
            << b.exact_cost.to_string() << ",\n";
      }
    }
    return out.str();
  }

  if (req.format == Format::ChartData) {
    out << "label,value\n";
    for (const auto& [c, list] : tables) {
      for (const auto& t : list) {
        if (blended) {
          out << detail::csv_field(std::string(to_string(c)) + " " + t.option_label + " per day (TK)") << ","
              << t.per_day.to_string() << "\n";
        } else {
          for (const auto& [period, v] : {std::pair{"per day", t.per_day}, std::pair{"per month", t.per_month},
                                         std::pair{"per year", t.per_year}})
            out << detail::csv_field(std::string(to_string(c)) + " " + t.option_label + " " + period + " (TK)") << ","
                << v.to_string() << "\n";
          out << detail::csv_field(std::string(to_string(c)) + " " + t.option_label + " (MWh/day)") << ","
              << t.fleet_mwh.to_string() << "\n";
        }
      }
      if (blended)
        out << detail::csv_field(std::string(to_string(c)) + " " + detail::blend_label(req) + " per day (TK)") << ","
            << blends.at(c).cost.to_string() << "\n";
    }
    return out.str();
  }

  // Text tables.
  for (const auto& [c, list] : tables) {
    const auto fleet = fleet_profile(c);
    out << "Daily cost, " << to_string(c) << " (" << display_tk(Decimal(fleet.lamp_count)) << " lamps, "
        << req.calendar.hours_per_day.to_string() << " h/day, " << tariff_text << " TK/kWh)\n";
    std::vector<std::vector<std::string>> rows = {{"Lighting option", "Per day (TK)", "Per month (TK)", "Per year (TK)"}};
    for (const auto& t : list)
      rows.push_back({t.option_label, display_tk(t.per_day), display_tk(t.per_month), display_tk(t.per_year)});
    if (const auto& s = saved[c])
      rows.push_back({"Save: " + list[0].option_label + " -> " + list[1].option_label, display_tk(s->per_day),
                      display_tk(s->per_month), display_tk(s->per_year)});
    if (blended) {
      const auto& b = blends.at(c);
      rows.push_back({detail::blend_label(req), display_tk(b.cost), display_tk(b.cost * Decimal(req.calendar.days_per_month)),
                      display_tk(b.cost * Decimal(req.calendar.days_per_year))});
    }
    out << detail::aligned(rows) << "\n";
  }

  out << "Fleet energy (MWh/day) [1]\n";
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"City", "Lamps"};
  for (const auto& o : options) header.push_back(o.label);
  if (blended) header.push_back(detail::blend_label(req));
  rows.push_back(header);
  for (const auto& [c, list] : tables) {
    const auto fleet = fleet_profile(c);
    std::vector<std::string> r = {to_string(c), display_tk(Decimal(fleet.lamp_count))};
    for (const auto& o : options) {
      std::string cell = "n/a";
      for (const auto& t : list)
        if (t.option_label == o.label) cell = display_mwh(t.fleet_mwh);
      r.push_back(cell);
    }
    if (blended) r.push_back(display_mwh(blends.at(c).fleet_mwh));
    rows.push_back(r);
  }
  out << detail::aligned(rows);

  for (const auto& [c, s] : saved)
    if (s)
      out << "\nEnergy saving, " << to_string(c) << ", " << tables[c][0].option_label << " -> "
          << tables[c][1].option_label << ": " << s->pct_energy.to_fixed(1) << "%\n";

  out << "\nNotes:\n";
  out << "[1] Daily energy in MWh per day; the reference figures label the same quantity \"MW\".\n";
  int n = 2;
  for (const auto& d : notes)
    out << "[" << n++ << "] " << to_string(d.city) << " " << d.what << ": reference value " << d.reference
        << ", computed " << d.computed << ". The computed value is shown.\n";
  out << "[" << n << "] Money is settled per lamp to the paisa before fleet totals; totals display rounded half-up to "
         "whole TK.\n";
  return out.str();
}

}  // namespace streetlight::report
