#include "leaklab/sample_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "leaklab/errors.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

namespace {

// Domain row counts of the real files.
constexpr long kTrainUs = 29170;
constexpr long kTrainNonUs = 3391;
constexpr long kTestUs = 14662;
constexpr long kTestNonUs = 1619;

// P(income>50K | sex, race, domain) = sigmoid(a_dom + b*male + c*white),
// solved so that the U.S. subset reproduces income rate 0.246 and the
// income-sex / income-race phi correlations 0.2146 / 0.0837.
constexpr double kIncomeBiasUs = -2.687075;
constexpr double kIncomeBiasNonUs = -2.719591;
constexpr double kIncomeMale = 1.259143;
constexpr double kIncomeWhite = 0.709059;

constexpr double kMaleRateUs = 0.670;
constexpr double kMaleRateNonUs = 0.640;

// Missing-value process: workclass+occupation jointly unknown, and the
// country of a non-U.S. row sometimes unrecorded, matching the real rates
// (about 7.4% of rows carry a "?").
constexpr double kWorkclassMissing = 0.0573;
constexpr double kCountryMissingNonUs = 0.172;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int pick(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

const char* kRaces[5] = {"White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo",
                         "Other"};
const std::vector<double> kRaceUs = {0.875, 0.092, 0.019, 0.010, 0.004};
const std::vector<double> kRaceNonUs = {0.45, 0.08, 0.28, 0.03, 0.16};

const char* kEducation[17] = {"",           "Preschool", "1st-4th",   "5th-6th",
                              "7th-8th",    "9th",       "10th",      "11th",
                              "12th",       "HS-grad",   "Some-college", "Assoc-voc",
                              "Assoc-acdm", "Bachelors", "Masters",   "Prof-school",
                              "Doctorate"};
// education-num distribution indexed 1..16, by income class.
const std::vector<double> kEduNumY0 = {0, 0.005, 0.012, 0.024, 0.042, 0.036, 0.062,
                                       0.082, 0.030, 0.355, 0.225, 0.046, 0.032,
                                       0.038, 0.008, 0.002, 0.001};
const std::vector<double> kEduNumY1 = {0, 0.000, 0.001, 0.002, 0.006, 0.008, 0.012,
                                       0.015, 0.010, 0.210, 0.175, 0.040, 0.038,
                                       0.290, 0.120, 0.048, 0.025};

const char* kRelationships[6] = {"Husband",        "Not-in-family", "Own-child",
                                 "Unmarried",      "Wife",          "Other-relative"};
// P(relationship | sex, income): the Husband/Wife structure is what makes sex
// partially recoverable from the remaining features.
const std::vector<double> kRelMaleY0 = {0.52, 0.20, 0.18, 0.06, 0.00, 0.04};
const std::vector<double> kRelMaleY1 = {0.83, 0.11, 0.01, 0.03, 0.00, 0.02};
const std::vector<double> kRelFemaleY0 = {0.00, 0.34, 0.20, 0.27, 0.12, 0.07};
const std::vector<double> kRelFemaleY1 = {0.00, 0.33, 0.02, 0.11, 0.50, 0.04};

const char* kMarital[7] = {"Married-civ-spouse", "Never-married",        "Divorced",
                           "Separated",          "Widowed",              "Married-spouse-absent",
                           "Married-AF-spouse"};

const char* kOccupations[14] = {"Adm-clerical",     "Armed-Forces",   "Craft-repair",
                                "Exec-managerial",  "Farming-fishing", "Handlers-cleaners",
                                "Machine-op-inspct", "Other-service",  "Priv-house-serv",
                                "Prof-specialty",   "Protective-serv", "Sales",
                                "Tech-support",     "Transport-moving"};
const std::vector<double> kOccMaleY0 = {0.06, 0.001, 0.21, 0.08, 0.06, 0.09,
                                        0.10, 0.09,  0.001, 0.07, 0.02, 0.09,
                                        0.03, 0.11};
const std::vector<double> kOccMaleY1 = {0.04, 0.001, 0.12, 0.27, 0.02, 0.01,
                                        0.04, 0.02,  0.001, 0.22, 0.04, 0.12,
                                        0.05, 0.05};
const std::vector<double> kOccFemaleY0 = {0.28, 0.000, 0.02, 0.07, 0.01, 0.03,
                                          0.06, 0.22,  0.03, 0.11, 0.01, 0.12,
                                          0.03, 0.01};
const std::vector<double> kOccFemaleY1 = {0.14, 0.000, 0.02, 0.28, 0.005, 0.005,
                                          0.02, 0.04,  0.005, 0.32, 0.01, 0.09,
                                          0.05, 0.01};

const char* kWorkclasses[8] = {"Private",      "Self-emp-not-inc", "Self-emp-inc",
                               "Federal-gov",  "Local-gov",        "State-gov",
                               "Without-pay",  "Never-worked"};
const std::vector<double> kWorkclassY0 = {0.78, 0.07, 0.02, 0.025, 0.060, 0.040,
                                          0.003, 0.002};
const std::vector<double> kWorkclassY1 = {0.66, 0.09, 0.08, 0.050, 0.070, 0.050,
                                          0.000, 0.000};

// Non-U.S. countries grouped by race, using the vocabulary of the real files.
const std::vector<std::string> kCountriesWhite = {
    "Mexico", "Canada", "Germany", "England", "Cuba", "El-Salvador", "Italy",
    "Poland", "Portugal", "Ireland", "France", "Greece", "Guatemala",
    "Columbia", "Peru", "Yugoslavia", "Hungary", "Scotland",
    "Holand-Netherlands"};
const std::vector<double> kCountriesWhiteW = {0.33, 0.08, 0.08, 0.06, 0.06, 0.05,
                                              0.04, 0.04, 0.02, 0.02, 0.02, 0.02,
                                              0.06, 0.05, 0.03, 0.01, 0.01, 0.01,
                                              0.01};
const std::vector<std::string> kCountriesAsian = {
    "Philippines", "India", "China", "Vietnam", "Japan", "Taiwan", "South",
    "Hong", "Cambodia", "Laos", "Thailand", "Iran"};
const std::vector<double> kCountriesAsianW = {0.30, 0.17, 0.13, 0.10, 0.08, 0.06,
                                              0.06, 0.03, 0.02, 0.02, 0.02, 0.01};
const std::vector<std::string> kCountriesBlack = {
    "Jamaica", "Haiti", "Dominican-Republic", "Trinadad&Tobago",
    "Outlying-US(Guam-USVI-etc)", "South", "England"};
const std::vector<double> kCountriesBlackW = {0.35, 0.25, 0.15, 0.10, 0.05, 0.05,
                                              0.05};
const std::vector<std::string> kCountriesOther = {
    "Mexico", "Puerto-Rico", "Dominican-Republic", "Guatemala", "Nicaragua",
    "Ecuador", "Honduras"};
const std::vector<double> kCountriesOtherW = {0.45, 0.22, 0.10, 0.10, 0.05, 0.04,
                                              0.04};

long clamp_long(double v, long lo, long hi) {
  const long r = static_cast<long>(std::llround(v));
  return std::max(lo, std::min(hi, r));
}

struct RowFields {
  std::string fields[14];
  int income = 0;
};

RowFields generate_row(Rng& rng, bool is_us) {
  RowFields row;
  const bool male = rng.uniform() < (is_us ? kMaleRateUs : kMaleRateNonUs);
  const int race = pick(rng, is_us ? kRaceUs : kRaceNonUs);
  const bool white = race == 0;
  const double bias = is_us ? kIncomeBiasUs : kIncomeBiasNonUs;
  const double p_income =
      sigmoid(bias + (male ? kIncomeMale : 0.0) + (white ? kIncomeWhite : 0.0));
  const int y = rng.uniform() < p_income ? 1 : 0;
  row.income = y;

  const int edu_num = pick(rng, y == 1 ? kEduNumY1 : kEduNumY0);
  const int rel = pick(rng, male ? (y == 1 ? kRelMaleY1 : kRelMaleY0)
                                 : (y == 1 ? kRelFemaleY1 : kRelFemaleY0));
  const char* rel_name = kRelationships[rel];

  std::string marital;
  if (rel == 0 || rel == 4) {  // Husband / Wife
    marital = rng.uniform() < 0.97 ? kMarital[0] : kMarital[6];
  } else if (rel == 2) {  // Own-child
    const int options[] = {1, 2, 3};
    marital = kMarital[options[pick(rng, {0.90, 0.05, 0.05})]];
  } else if (rel == 1) {  // Not-in-family
    const int options[] = {1, 2, 4, 3};
    marital = kMarital[options[pick(rng, {0.50, 0.30, 0.10, 0.10})]];
  } else if (rel == 3) {  // Unmarried
    const int options[] = {2, 1, 3, 4};
    marital = kMarital[options[pick(rng, {0.40, 0.30, 0.15, 0.15})]];
  } else {  // Other-relative
    const int options[] = {1, 2, 3, 5};
    marital = kMarital[options[pick(rng, {0.60, 0.15, 0.15, 0.10})]];
  }

  const int occ = pick(rng, male ? (y == 1 ? kOccMaleY1 : kOccMaleY0)
                                 : (y == 1 ? kOccFemaleY1 : kOccFemaleY0));
  const int wc = pick(rng, y == 1 ? kWorkclassY1 : kWorkclassY0);

  const long age = y == 1 ? clamp_long(rng.normal(44.2, 10.5), 17, 90)
                          : clamp_long(rng.normal(36.8, 13.7), 17, 90);
  const double hours_mean = 40.0 + (y == 1 ? 5.0 : 0.0) + (male ? 1.5 : -3.5);
  const long hours = clamp_long(rng.normal(hours_mean, 11.0), 1, 99);
  const long fnlwgt = clamp_long(std::exp(rng.normal(12.0, 0.5)), 12285, 1484705);

  long cap_gain = 0;
  if (y == 1) {
    if (rng.uniform() < 0.20) {
      cap_gain = rng.uniform() < 0.08 ? 99999
                                      : clamp_long(std::exp(rng.normal(8.9, 0.7)),
                                                   3103, 45000);
    }
  } else if (rng.uniform() < 0.035) {
    cap_gain = clamp_long(std::exp(rng.normal(7.2, 0.8)), 114, 6849);
  }
  long cap_loss = 0;
  if (cap_gain == 0) {
    if (y == 1 && rng.uniform() < 0.05) {
      cap_loss = clamp_long(rng.normal(1920.0, 150.0), 653, 3004);
    } else if (y == 0 && rng.uniform() < 0.035) {
      cap_loss = clamp_long(rng.normal(1650.0, 300.0), 155, 2500);
    }
  }

  std::string country;
  if (is_us) {
    country = "United-States";
  } else if (rng.uniform() < kCountryMissingNonUs) {
    country = "?";
  } else if (race == 0) {
    country = kCountriesWhite[pick(rng, kCountriesWhiteW)];
  } else if (race == 2) {
    country = kCountriesAsian[pick(rng, kCountriesAsianW)];
  } else if (race == 1) {
    country = kCountriesBlack[pick(rng, kCountriesBlackW)];
  } else {
    country = kCountriesOther[pick(rng, kCountriesOtherW)];
  }

  std::string workclass = kWorkclasses[wc];
  std::string occupation = kOccupations[occ];
  if (rng.uniform() < kWorkclassMissing) {
    workclass = "?";
    occupation = "?";
  }

  row.fields[0] = std::to_string(age);
  row.fields[1] = workclass;
  row.fields[2] = std::to_string(fnlwgt);
  row.fields[3] = kEducation[edu_num];
  row.fields[4] = std::to_string(edu_num);
  row.fields[5] = marital;
  row.fields[6] = occupation;
  row.fields[7] = rel_name;
  row.fields[8] = kRaces[race];
  row.fields[9] = male ? "Male" : "Female";
  row.fields[10] = std::to_string(cap_gain);
  row.fields[11] = std::to_string(cap_loss);
  row.fields[12] = std::to_string(hours);
  row.fields[13] = country;
  return row;
}

void write_file(const std::string& path, Rng& rng, long us_rows, long non_us_rows,
                bool test_format) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path);
  if (test_format) os << "|1x3 Cross validator\n";

  std::vector<int> is_us;
  is_us.reserve(us_rows + non_us_rows);
  for (long i = 0; i < us_rows; ++i) is_us.push_back(1);
  for (long i = 0; i < non_us_rows; ++i) is_us.push_back(0);
  rng.shuffle(is_us);

  for (int us : is_us) {
    const RowFields row = generate_row(rng, us != 0);
    for (const auto& f : row.fields) os << f << ", ";
    os << (row.income == 1 ? ">50K" : "<=50K");
    if (test_format) os << ".";
    os << "\n";
  }
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace

SampleCounts write_sample_adult_files(const std::string& dir, std::uint64_t seed) {
  Rng train_rng(derive_seed(seed, "sample-train"));
  Rng test_rng(derive_seed(seed, "sample-test"));
  write_file(dir + "/adult.data", train_rng, kTrainUs, kTrainNonUs, false);
  write_file(dir + "/adult.test", test_rng, kTestUs, kTestNonUs, true);
  return {kTrainUs + kTrainNonUs, kTestUs + kTestNonUs};
}

}  // namespace leaklab
