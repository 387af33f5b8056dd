#include <gtest/gtest.h>

#include <cstdint>

#include "streetlight/energy_model.hpp"

namespace streetlight::energy {
namespace {

Decimal D(const char* s) { return Decimal::parse(s); }
const Tariff kTariff{};

TEST(DailyEnergy, PublishedScenarios) {
  EXPECT_EQ(daily_energy_kwh(Decimal(100), 100, Decimal(12)), D("1.2"));
  EXPECT_EQ(daily_energy_kwh(Decimal(40), 100, Decimal(12)), D("0.48"));
  EXPECT_EQ(daily_energy_kwh(Decimal(40), 50, Decimal(12)), D("0.24"));
  EXPECT_THROW(daily_energy_kwh(Decimal(40), 50, Decimal(-1)), std::invalid_argument);
}

TEST(DailyCost, ExactProductDisplayRoundedSeparately) {
  EXPECT_EQ(daily_cost_tk(D("1.2"), kTariff), D("9.24"));
  EXPECT_EQ(daily_cost_tk(D("0.48"), kTariff), D("3.696"));
  EXPECT_EQ(daily_cost_tk(D("0.48"), kTariff).to_fixed(2), "3.70");
  EXPECT_EQ(daily_cost_tk(Decimal(0), kTariff), Decimal(0));
  EXPECT_EQ(lamp_daily_charge(D("0.24"), kTariff), D("1.85"));
}

TEST(FleetEnergy, PublishedFleetFigures) {
  EXPECT_EQ(fleet_daily_energy_mwh(33750, D("1.2")), D("40.5"));
  EXPECT_EQ(fleet_daily_energy_mwh(33750, D("0.48")), D("16.2"));
  EXPECT_EQ(fleet_daily_energy_mwh(46410, D("0.48")), D("22.2768"));
  EXPECT_EQ(display_mwh(fleet_daily_energy_mwh(46410, D("0.48"))), "22.3");
  EXPECT_EQ(fleet_daily_energy_mwh(2474, D("0.24")), D("0.59376"));
  EXPECT_EQ(display_mwh(fleet_daily_energy_mwh(2474, D("0.24"))), "0.6");
  EXPECT_THROW(fleet_daily_energy_mwh(0, D("1")), std::invalid_argument);
}

TEST(CostTable, CccRows) {
  const auto fleet = fleet_profile(City::CCC);
  const auto sodium = cost_table(fleet, sodium_100w(), kTariff);
  EXPECT_EQ(sodium.per_day, Decimal(311850));
  EXPECT_EQ(sodium.per_month, Decimal(9355500));
  EXPECT_EQ(sodium.per_year, Decimal(113825250));

  const auto led = cost_table(fleet, led_40w(100), kTariff);
  EXPECT_EQ(led.per_day, Decimal(124875));
  EXPECT_EQ(led.per_month, Decimal(3746250));
  EXPECT_EQ(led.per_year, Decimal(45579375));

  const auto dim = cost_table(fleet, led_40w(50), kTariff);
  EXPECT_EQ(dim.per_day, D("62437.5"));
  EXPECT_EQ(display_tk(dim.per_day), "62,438");
  EXPECT_EQ(dim.per_month, Decimal(1873125));
  EXPECT_EQ(dim.per_year, D("22789687.5"));
  EXPECT_EQ(display_tk(dim.per_year), "22,789,688");
}

TEST(CostTable, SodiumOnlyWhereInstalled) {
  for (City c : {City::DNCC, City::DSCC, City::NCC})
    EXPECT_THROW(cost_table(fleet_profile(c), sodium_100w(), kTariff), IncompatibleOption);
}

TEST(Savings, SodiumToLed) {
  const auto fleet = fleet_profile(City::CCC);
  const auto s = savings(cost_table(fleet, sodium_100w(), kTariff), cost_table(fleet, led_40w(100), kTariff));
  EXPECT_EQ(s.per_day, Decimal(186975));
  EXPECT_EQ(s.per_month, Decimal(5609250));
  // Independent oracle: daily save times 365, and the year-column difference.
  const std::int64_t oracle_year = 186975LL * 365;
  EXPECT_EQ(oracle_year, 113825250LL - 45579375LL);
  EXPECT_EQ(s.per_year, Decimal(oracle_year));
  EXPECT_EQ(s.per_year, Decimal(68245875));
  EXPECT_EQ(s.pct_energy, Decimal(60));
  EXPECT_EQ(s.fleet_mwh, D("24.3"));
}

TEST(Savings, SelfIsZeroAndMismatchRejected) {
  const auto t = cost_table(fleet_profile(City::DNCC), led_40w(100), kTariff);
  const auto s = savings(t, t);
  EXPECT_TRUE(s.per_day.is_zero() && s.per_month.is_zero() && s.per_year.is_zero() && s.pct_energy.is_zero());
  EXPECT_THROW(savings(t, cost_table(fleet_profile(City::NCC), led_40w(100), kTariff)), MismatchedFleets);
  Calendar ten_hours;
  ten_hours.hours_per_day = Decimal(10);
  EXPECT_THROW(savings(t, cost_table(fleet_profile(City::DNCC), led_40w(50), kTariff, ten_hours)), MismatchedFleets);
}

TEST(Blended, HalfNightDimmedInCcc) {
  const auto fleet = fleet_profile(City::CCC);
  const auto b = blended_daily(fleet, Decimal(40), Decimal(6), Decimal(6), 50, kTariff);
  // Closed-form oracle in integer units: per-lamp Wh, fleet kWh, paisa.
  const std::int64_t wh = 40 * 6 + 40 * 50 * 6 / 100;  // 360 Wh
  EXPECT_EQ(b.kwh_per_lamp, Decimal(wh).shifted(3));
  EXPECT_EQ(b.fleet_mwh, Decimal(33750 * wh).shifted(6));
  EXPECT_EQ(b.fleet_mwh, D("12.15"));
  const std::int64_t full_paisa = 370;  // 0.48 kWh * 7.70 = 3.696 -> 3.70
  const std::int64_t dim_paisa = 185;   // 0.24 kWh * 7.70 = 1.848 -> 1.85
  const std::int64_t fleet_paisa_x12 = 33750 * (6 * full_paisa + 6 * dim_paisa);
  ASSERT_EQ(fleet_paisa_x12 % 12, 0);
  EXPECT_EQ(b.cost, Decimal(fleet_paisa_x12 / 12).shifted(2));
  EXPECT_EQ(b.cost, D("93656.25"));
  EXPECT_EQ(display_tk(b.cost), "93,656");
}

TEST(Blended, DegenerateBlendsMatchScenarios) {
  for (City c : kAllCities) {
    const auto fleet = fleet_profile(c);
    const auto full = cost_table(fleet, led_40w(100), kTariff);
    const auto dim = cost_table(fleet, led_40w(50), kTariff);
    const auto b0 = blended_daily(fleet, Decimal(40), Decimal(12), Decimal(0), 50, kTariff);
    EXPECT_EQ(b0.kwh_per_lamp, full.per_lamp_kwh);
    EXPECT_EQ(b0.fleet_mwh, full.fleet_mwh);
    EXPECT_EQ(b0.cost, full.per_day);
    const auto b1 = blended_daily(fleet, Decimal(40), Decimal(0), Decimal(12), 50, kTariff);
    EXPECT_EQ(b1.kwh_per_lamp, dim.per_lamp_kwh);
    EXPECT_EQ(b1.fleet_mwh, dim.fleet_mwh);
    EXPECT_EQ(b1.cost, dim.per_day);
  }
}

TEST(Properties, LinearityHalvingCrossCheck) {
  for (City c : kAllCities) {
    const auto fleet = fleet_profile(c);
    std::vector<LampOption> options = {led_40w(100), led_40w(50)};
    if (fleet.sodium_installed) options.push_back(sodium_100w());
    for (const auto& opt : options) {
      const auto t = cost_table(fleet, opt, kTariff);
      // fleet MWh * tariff * 1000 == exact per-day cost
      EXPECT_EQ(t.fleet_mwh * Decimal(1000) * kTariff.rate_tk_per_kwh, t.exact_per_day);
      // linear in tariff
      const Tariff doubled{kTariff.rate_tk_per_kwh * Decimal(2)};
      EXPECT_EQ(cost_table(fleet, opt, doubled).exact_per_day, t.exact_per_day * Decimal(2));
      // linear in lamp count
      FleetProfile bigger = fleet;
      bigger.lamp_count *= 3;
      EXPECT_EQ(cost_table(bigger, opt, kTariff).exact_per_year, t.exact_per_year * Decimal(3));
    }
    const auto full = cost_table(fleet, led_40w(100), kTariff);
    const auto dim = cost_table(fleet, led_40w(50), kTariff);
    EXPECT_EQ(dim.fleet_mwh * Decimal(2), full.fleet_mwh);
    EXPECT_EQ(dim.exact_per_day * Decimal(2), full.exact_per_day);
    EXPECT_EQ(dim.exact_per_year * Decimal(2), full.exact_per_year);
    EXPECT_EQ(dim.per_lamp_kwh * Decimal(2), full.per_lamp_kwh);
  }
}

TEST(Properties, BlendBetweenScenarios) {
  const auto fleet = fleet_profile(City::DSCC);
  const auto s2 = daily_energy_kwh(Decimal(40), 100, Decimal(12));
  const auto s3 = daily_energy_kwh(Decimal(40), 50, Decimal(12));
  for (int dim_pct = 50; dim_pct <= 100; dim_pct += 5)
    for (int full = 0; full <= 12; ++full) {
      const auto b = blended_daily(fleet, Decimal(40), Decimal(full), Decimal(12 - full), dim_pct, kTariff);
      EXPECT_LE(s3, b.kwh_per_lamp);
      EXPECT_LE(b.kwh_per_lamp, s2);
    }
}

TEST(FourCities, LedFullAndDimmedFleetEnergy) {
  struct Expect {
    City city;
    const char* exact;
    const char* shown;
    const char* dim_shown;
  };
  for (const auto& e : {Expect{City::CCC, "16.2", "16.2", "8.1"}, Expect{City::DNCC, "22.2768", "22.3", "11.1"},
                        Expect{City::DSCC, "26.38368", "26.4", "13.2"}, Expect{City::NCC, "1.18752", "1.2", "0.6"}}) {
    const auto fleet = fleet_profile(e.city);
    const auto full = cost_table(fleet, led_40w(100), kTariff);
    const auto dim = cost_table(fleet, led_40w(50), kTariff);
    EXPECT_EQ(full.fleet_mwh, D(e.exact)) << to_string(e.city);
    EXPECT_EQ(display_mwh(full.fleet_mwh), e.shown);
    EXPECT_EQ(display_mwh(dim.fleet_mwh), e.dim_shown);
  }
}

}  // namespace
}  // namespace streetlight::energy
