"""
The hidden farm the policies are evaluated against.

All randomness (weather, degradation noise, renewal parameters) is drawn up
front from the truth seed, so what a policy decides can never shift the
streams another policy sees.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
import numpy.typing as npt

from degradation.entities import BaselinePrior
from degradation.services import advance_amplitude
from harness.entities import PlannerSetup
from scenario.entities import HOURS_PER_DAY
from scenario.services import generate

logger = logging.getLogger("om_planner")

# smallest true drift a draw may take (signal units / hour)
MIN_TRUE_DRIFT = 1e-3


def _draw_parameters(
    prior: BaselinePrior, rng: np.random.Generator, size: Tuple[int, ...]
) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    draws = rng.multivariate_normal(prior.mean, prior.covariance, size=size)
    return draws[..., 0], np.maximum(draws[..., 1], MIN_TRUE_DRIFT)


@dataclass(eq=False)
class FarmTruth:
    """
    Mutable hidden state of the fleet plus its pre-drawn streams.

    Attributes:
        wind, wave, price: realised hourly series, 24 * (1 + n_rolls) long
        amplitude: (N_I,) true blade signal
        beta: (N_I,) true drift per equivalent hour
        equivalent_hours: (N_I,) equivalent time since the last renewal
        elapsed_days: (N_I,) calendar days since the last renewal
        failed: (N_I,) amplitude has crossed Λ
        noise: (n_rolls, 24, N_I) standard normal increments
        renewal_alpha, renewal_beta: (N_I, n_rolls) parameters of successive renewals
    """

    wind: npt.NDArray[np.float64]
    wave: npt.NDArray[np.float64]
    price: npt.NDArray[np.float64]
    amplitude: npt.NDArray[np.float64]
    beta: npt.NDArray[np.float64]
    equivalent_hours: npt.NDArray[np.float64]
    elapsed_days: npt.NDArray[np.float64]
    failed: npt.NDArray[np.bool_]
    noise: npt.NDArray[np.float64]
    renewal_alpha: npt.NDArray[np.float64]
    renewal_beta: npt.NDArray[np.float64]
    renewals: npt.NDArray[np.int_]
    sigma: float
    threshold: float
    injections: Dict[int, int]
    seed: int

    @classmethod
    def create(cls, setup: PlannerSetup, truth_seed: int, n_rolls: int) -> "FarmTruth":
        campaign = setup.campaign
        n_turbines = campaign.n_turbines
        weather_seq, start_seq, noise_seq, renewal_seq = np.random.SeedSequence(truth_seed).spawn(4)

        weather = generate(
            setup.weather,
            horizon_days=n_rolls,
            n_scenarios=1,
            seed=int(weather_seq.generate_state(1)[0]),
        )

        start = np.random.default_rng(start_seq)
        alpha, beta = _draw_parameters(setup.prior, start, (n_turbines,))
        low, high = campaign.initial_age_days
        age_days = start.uniform(low, high, n_turbines)
        hours = age_days * HOURS_PER_DAY
        amplitude = np.asarray(
            advance_amplitude(alpha, beta, setup.prior.sigma, 1.0, hours, start.standard_normal(n_turbines)),
            dtype=float,
        )
        # a campaign starts with every turbine running
        amplitude = np.minimum(amplitude, campaign.failure_threshold - 1.0)

        renewal_alpha, renewal_beta = _draw_parameters(
            setup.prior, np.random.default_rng(renewal_seq), (n_turbines, n_rolls)
        )
        truth = cls(
            wind=weather.wind[0],
            wave=weather.wave[0],
            price=weather.price[0],
            amplitude=amplitude,
            beta=beta,
            equivalent_hours=hours,
            elapsed_days=age_days,
            failed=np.zeros(n_turbines, dtype=bool),
            noise=np.random.default_rng(noise_seq).standard_normal((n_rolls, HOURS_PER_DAY, n_turbines)),
            renewal_alpha=renewal_alpha,
            renewal_beta=renewal_beta,
            renewals=np.zeros(n_turbines, dtype=int),
            sigma=setup.prior.sigma,
            threshold=campaign.failure_threshold,
            injections=dict(campaign.failure_injections),
            seed=truth_seed,
        )
        logger.debug("Created farm truth", extra={"truth_seed": truth_seed, "turbines": n_turbines})
        return truth

    @property
    def n_turbines(self) -> int:
        return int(self.amplitude.size)

    def hour_index(self, roll: int, hour: int) -> int:
        return roll * HOURS_PER_DAY + hour

    def inject_failures(self, roll: int) -> Tuple[int, ...]:
        """Apply the failures scheduled for the start of ``roll``."""
        hit = tuple(turbine for turbine, day in self.injections.items() if day == roll)
        for turbine in hit:
            self.amplitude[turbine] = max(self.amplitude[turbine], self.threshold + 1.0)
            self.failed[turbine] = True
        return hit

    def advance(self, turbine: int, roll: int, hour: int, psi: float) -> bool:
        """One operating hour at loading factor ``psi``; True if it caused a failure."""
        if self.failed[turbine]:
            return False
        self.amplitude[turbine] = float(
            advance_amplitude(
                self.amplitude[turbine], self.beta[turbine], self.sigma, psi, 1.0, self.noise[roll, hour, turbine]
            )
        )
        self.equivalent_hours[turbine] += psi
        if self.amplitude[turbine] >= self.threshold:
            self.failed[turbine] = True
            return True
        return False

    def renew(self, turbine: int) -> None:
        """As-good-as-new replacement from the pre-drawn renewal stream."""
        draw = min(int(self.renewals[turbine]), self.renewal_alpha.shape[1] - 1)
        self.amplitude[turbine] = self.renewal_alpha[turbine, draw]
        self.beta[turbine] = self.renewal_beta[turbine, draw]
        self.equivalent_hours[turbine] = 0.0
        self.elapsed_days[turbine] = 0.0
        self.failed[turbine] = False
        self.renewals[turbine] += 1

    def remaining_life_days(self, turbine: int) -> float:
        """Drift-implied true life left, in equivalent days."""
        if self.failed[turbine]:
            return 0.0
        gap = self.threshold - self.amplitude[turbine]
        return max(float(gap / (HOURS_PER_DAY * self.beta[turbine])), 0.0)
