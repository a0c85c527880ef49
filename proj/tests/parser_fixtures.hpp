#pragma once

// Response fixtures in the styles models actually produce. Shared by the
// parse unit tests and the acceptance suite.

#include <string>
#include <vector>

namespace fixtures {

enum class Kind { Solution, Image, Physics, General, Json };

struct ParserFixture {
    const char* name;
    Kind kind;
    const char* text;
    /// Complete | Partial | Unparsed | Pass | Fail | object | none
    const char* expected;
    /// Expected number of findings; -1 means unchecked.
    int findings = -1;
};

inline const std::vector<ParserFixture>& parser_fixtures()
{
    static const std::vector<ParserFixture> all{
        // --- solutions ------------------------------------------------------
        {"canonical complete", Kind::Solution, R"~(**1. Summary**

**a. Verdict:** I have successfully solved the problem. The final answer is $v = \sqrt{2gh}$.

**b. Method Sketch:** Energy conservation between the release point and the floor.

**2. Detailed Solution**

Let the block start from rest at height $h$. Then $mgh = \tfrac12 m v^2$, hence $v = \sqrt{2gh}$.)~",
         "Complete"},
        {"markdown partial", Kind::Solution, R"~(## Summary
### a. Verdict
I have not found a complete solution, but I have rigorously proven that the period is independent of amplitude.
### b. Method Sketch
Small-angle expansion.
## Detailed Solution
Expanding the potential to second order ...)~",
         "Partial"},
        {"inline summary heading", Kind::Solution, R"~(Summary: I have successfully solved the problem. The final answer is 12 N.

Detailed Solution:
Newton's second law gives F = ma = 12 N.)~",
         "Complete"},
        {"parenthesised numbering", Kind::Solution, R"~(1) Summary
Verdict: The final answer is T = 300 K.
Method Sketch: ideal gas law.
2) Detailed Solution
pV = nRT so T = 300 K.)~",
         "Complete"},
        {"headingless blob", Kind::Solution, "The velocity is probably around 3 m/s, give or take.", "Unparsed"},
        {"headings without verdict", Kind::Solution, R"~(**Summary**
Some thoughts about the circuit.
**Detailed Solution**
Kirchhoff's laws ...)~",
         "Unparsed"},
        {"hash-wrapped headings", Kind::Solution, R"~(### 1. Summary ###
a. Verdict: I have successfully solved the problem.
Final answer: $\lambda = 500\,\text{nm}$
### 2. Detailed Solution ###
Using the grating equation ...)~",
         "Complete"},
        {"partial outranks answer phrase", Kind::Solution, R"~(**Summary**
I have not found a complete solution, but I have rigorously proven that the final answer is bounded below by 2 J.
**Detailed Solution**
...)~",
         "Partial"},
        {"bold final answer phrase", Kind::Solution, R"~(**Summary**
The **final answer is** $T = 2\pi\sqrt{L/g}$.
**Detailed Solution**
For small oscillations ...)~",
         "Complete"},
        {"empty solution", Kind::Solution, "", "Unparsed"},

        // --- image verdicts -------------------------------------------------
        {"image yes", Kind::Image, "IF CORRECT: yes\nChecked axis labels, units, tick values and the curve trend.", "Pass",
         0},
        {"image no with one finding", Kind::Image, R"~(**IF CORRECT:** no

Detailed Verification
- **Category**: data
  - **Evidence**: The curve crosses x = 2 s at y = 4 m/s.
  - **Mismatch**: INFORMATION lists y = 5 m/s at x = 2 s.
  - **Why**: Off by more than one tenth of the smallest tick.
  - **Confidence**: high)~",
         "Fail", 1},
        {"image marker quoted", Kind::Image, "Line 1: `IF CORRECT: yes`\nAll labels agree.", "Pass", 0},
        {"image no with two findings", Kind::Image, R"~(IF CORRECT: no
Detailed Verification
- Category: labels
  Evidence: y-axis reads "Voltage (V)"
  Mismatch: INFORMATION says "Current (A)"
  Why: wrong quantity
  Confidence: high
- Category: elements
  Evidence: a second dashed curve is visible
  Mismatch: only one curve described
  Why: omission
  Confidence: medium)~",
         "Fail", 2},
        {"image missing marker", Kind::Image, "The description looks mostly fine to me.", "Fail", 0},
        {"image unclear marker", Kind::Image, "IF CORRECT: maybe\nSome checks.", "Fail", 0},
        {"image uppercase no", Kind::Image, "if correct: NO\nDetailed Verification\n- Category: theme\n- Evidence: x",
         "Fail", 1},

        // --- physics verifier -----------------------------------------------
        {"physics pass", Kind::Physics, "Final Verdict: PASS\nFindings:\n- None.", "Pass", 0},
        {"physics fail with unit error", Kind::Physics, R"~(- Final Verdict: FAIL
- Findings:
  - "τ = m k": the characteristic time τ has an incorrect unit under dimensional analysis (kg·N/m is not a time).
- Bug Report: τ has incorrect units.)~",
         "Fail", 1},
        {"physics quoted pass", Kind::Physics, "Final Verdict: \"PASS\"\nFindings: none", "Pass", 0},
        {"physics bold fail", Kind::Physics, "**Final Verdict:** FAIL\n\n**Findings:**\n* \"g = 98 m/s^2\" wrong magnitude",
         "Fail", 1},
        {"physics verdict on next line", Kind::Physics, "### Final Verdict\n\nPASS\n\n### Findings\n- none", "Pass", 0},
        {"physics pass with note", Kind::Physics, "Final Verdict: PASS, no material issues found.", "Pass"},
        {"physics ambiguous", Kind::Physics, "Final Verdict: PASS or FAIL depending on interpretation.", "Fail"},
        {"physics quoted pass inside findings", Kind::Physics,
         "Final Verdict: FAIL\nFindings:\n- \"this check will PASS trivially\" uses cm as m", "Fail", 1},

        // --- general verifier -----------------------------------------------
        {"general invalid example", Kind::General, R"~(**Final Verdict:** The solution is **invalid** because it contains major reasoning errors.

**List of Findings:**
*   **Location:** "The maximum value is found by setting $f'(x)=0$ and solving $x=2$"
    *   **Stage:** COARSE – Problem Interpretation
    *   **Issue:** The problem explicitly asks for the **minimum**, but the solution computes the maximum.

*   **Location:** "Since $A > B$ and $C > D$, it follows $A - C > B - D$"
    *   **Stage:** FINE – Logical Consistency
    *   **Issue:** Invalid inference; inequalities cannot be combined this way.

*   **Location:** "Therefore, $2 + 3 = 6$"
    *   **Stage:** FINE – Calculation
    *   **Issue:** Arithmetic error.

**b. Detailed Verification Log**
Step 1 ...)~",
         "Fail", 3},
        {"general correct", Kind::General, "**a. Summary**\n*   **Final Verdict**: The solution is correct.\n*   **List of Findings**: None.",
         "Pass", 0},
        {"general fails", Kind::General, "Final Verdict: The solution fails due to major reasoning errors.", "Fail"},
        {"general partially valid", Kind::General, "Final Verdict: The solution is partially valid but incomplete.", "Fail"},
        {"general first line verdict", Kind::General, "The solution is correct.\nEverything checks out.", "Pass"},
        {"general negated", Kind::General, "Final Verdict: The solution is not correct.", "Fail"},
        {"general valid no errors", Kind::General, "Final Verdict: The solution is valid; no errors were found.", "Pass"},
        {"general garbage", Kind::General, "lorem ipsum dolor sit amet", "Fail", 0},
        {"general empty", Kind::General, "", "Fail", 0},

        // --- JSON extraction ------------------------------------------------
        {"json fenced", Kind::Json, "Here it is:\n```json\n{\"title\":\"x\"}\n```\n", "object"},
        {"json last valid fence", Kind::Json, "```json\n{\"title\": oops}\n```\ntext\n```json\n{\"title\":\"y\"}\n```",
         "object"},
        {"json unfenced in prose", Kind::Json, "The result {\"figure\":[{\"id\":\"a\"}]} as requested.", "object"},
        {"json absent", Kind::Json, "No structured output, sorry {not json}.", "none"},
    };
    return all;
}

} // namespace fixtures
