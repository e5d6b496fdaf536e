"""Rebuild the IBM HR attrition CSV in its original 35-column layout.

Source: the `attrition` table of the R package modeldata, as bundled in the
`rdatasets` wheel on PyPI. modeldata recodes ordinal survey answers as labels,
replaces spaces with underscores and drops four constant/id columns; this
script undoes all of that.

    pip download --no-deps rdatasets==0.2.10 -d /tmp/rd
    python scripts/rebuild_ibm_csv.py /tmp/rd/rdatasets-0.2.10-py3-none-any.whl data/ibm_hr_attrition.csv
"""

import lzma
import pickle
import sys
import zipfile

LIKERT = {"Low": 1, "Medium": 2, "High": 3, "Very_High": 4}
ORDINALS = {
    "Education": {"Below_College": 1, "College": 2, "Bachelor": 3, "Master": 4, "Doctor": 5},
    "EnvironmentSatisfaction": LIKERT,
    "JobInvolvement": LIKERT,
    "JobSatisfaction": LIKERT,
    "RelationshipSatisfaction": LIKERT,
    "PerformanceRating": {"Low": 1, "Good": 2, "Excellent": 3, "Outstanding": 4},
    "WorkLifeBalance": {"Bad": 1, "Good": 2, "Better": 3, "Best": 4},
}
COLUMNS = [
    "Age", "Attrition", "BusinessTravel", "DailyRate", "Department", "DistanceFromHome",
    "Education", "EducationField", "EmployeeCount", "EmployeeNumber", "EnvironmentSatisfaction",
    "Gender", "HourlyRate", "JobInvolvement", "JobLevel", "JobRole", "JobSatisfaction",
    "MaritalStatus", "MonthlyIncome", "MonthlyRate", "NumCompaniesWorked", "Over18", "OverTime",
    "PercentSalaryHike", "PerformanceRating", "RelationshipSatisfaction", "StandardHours",
    "StockOptionLevel", "TotalWorkingYears", "TrainingTimesLastYear", "WorkLifeBalance",
    "YearsAtCompany", "YearsInCurrentRole", "YearsSinceLastPromotion", "YearsWithCurrManager",
]


def main(wheel, out):
    raw = zipfile.ZipFile(wheel).read("rdatasets/_data/modeldata/attrition.pkl.compress")
    df = pickle.loads(lzma.decompress(raw))
    for col, codes in ORDINALS.items():
        df[col] = df[col].map(codes).astype(int)
    for col in ("Department", "EducationField", "JobRole"):
        df[col] = df[col].str.replace("_", " ").str.replace("Research Development", "Research & Development")
    df["EmployeeNumber"] = df.pop("rownames")
    df["EmployeeCount"] = 1
    df["Over18"] = "Y"
    df["StandardHours"] = 80
    df[COLUMNS].to_csv(out, index=False, lineterminator="\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
