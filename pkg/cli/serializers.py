"""
Run-file validation.

One serializer per section. Every field is optional: whatever a file leaves
out keeps the default of the dataclass it builds. Serializing a ``RunConfig``
back through the same classes gives the resolved snapshot.
"""

from dataclasses import replace
from typing import Any, Dict, Mapping, Type

from rest_framework import serializers

from cli.entities import DegradationSettings, PolicySettings, PowerCurveSettings, RunConfig
from degradation.entities import BaselinePrior
from harness.entities import CampaignConfig
from milp.entities import Criticality, MilpConfig
from policies.entities import PolicyKind
from power.entities import PowerCurve, YawGrid
from scenario.entities import AccessRule, WeatherModel


class EnumChoiceField(serializers.ChoiceField):
    def __init__(self, enum_cls: Type, **kwargs: Any) -> None:
        self.enum_cls = enum_cls
        super().__init__(choices=[member.value for member in enum_cls], **kwargs)

    def to_internal_value(self, data):
        return self.enum_cls(super().to_internal_value(data))

    def to_representation(self, value):
        return self.enum_cls(value).value


class StrictSerializer(serializers.Serializer):
    """Rejects keys it does not declare and builds its section's dataclass."""

    target: Type = dict

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return super().to_internal_value(data)

    def build(self, data: Dict[str, Any]):
        return self.target(**data)


class MilpSerializer(StrictSerializer):
    target = MilpConfig

    C_PM = serializers.FloatField(source="preventive_cost", min_value=0, required=False)
    C_CM = serializers.FloatField(source="corrective_cost", min_value=0, required=False)
    C_x = serializers.FloatField(source="crew_cost", min_value=0, required=False)
    C_q = serializers.FloatField(source="overtime_cost", min_value=0, required=False)
    C_r = serializers.FloatField(source="vessel_cost", min_value=0, required=False)
    C_lambda = serializers.FloatField(source="rul_value", min_value=0, required=False)
    N_x = serializers.IntegerField(source="crews", min_value=1, required=False)
    N_q = serializers.FloatField(source="shift_hours", min_value=0, required=False)
    N_H = serializers.FloatField(source="max_overtime", min_value=0, required=False)
    N_theta = serializers.FloatField(source="maintenance_threshold_days", required=False)
    U = serializers.FloatField(source="interruption_upfront", min_value=0, allow_null=True, required=False)
    Y = serializers.FloatField(source="interruption_hourly", min_value=0, allow_null=True, required=False)
    N_D = serializers.IntegerField(source="lth_days", min_value=1, required=False)
    N_S = serializers.IntegerField(source="n_scenarios", min_value=1, required=False)
    big_m = serializers.FloatField(min_value=0, allow_null=True, required=False)
    gap = serializers.FloatField(min_value=0, max_value=1, required=False)
    time_limit = serializers.FloatField(min_value=0, required=False)
    integer_overtime = serializers.BooleanField(required=False)
    criticality = EnumChoiceField(Criticality, required=False)


class AccessSerializer(StrictSerializer):
    target = AccessRule

    nu_max = serializers.FloatField(source="wind_threshold", min_value=0, required=False)
    eta_max = serializers.FloatField(source="wave_threshold", min_value=0, required=False)
    t_R = serializers.IntegerField(source="first_light", min_value=0, max_value=24, required=False)
    t_D = serializers.IntegerField(source="last_light", min_value=0, max_value=24, required=False)
    preventive_hours = serializers.FloatField(min_value=0, required=False)
    corrective_hours = serializers.FloatField(min_value=0, required=False)
    mission_cap_hours = serializers.IntegerField(min_value=1, required=False)


class ProcessSerializer(StrictSerializer):
    mean_profile = serializers.ListField(child=serializers.FloatField(), min_length=24, max_length=24, required=False)
    std = serializers.FloatField(min_value=0, required=False)
    autocorrelation = serializers.FloatField(min_value=-1, max_value=1, required=False)


class WeatherSerializer(StrictSerializer):
    wind = ProcessSerializer(required=False)
    wave = ProcessSerializer(required=False)
    price = ProcessSerializer(required=False)
    wind_wave_correlation = serializers.FloatField(min_value=-1, max_value=1, required=False)
    allow_negative_prices = serializers.BooleanField(required=False)
    seed = serializers.IntegerField(min_value=0, required=False)

    def build(self, data):
        base = WeatherModel()
        processes = {}
        for name in ("wind", "wave", "price"):
            given = dict(data.pop(name, {}))
            if "mean_profile" in given:
                given["mean_profile"] = tuple(given["mean_profile"])
            processes[name] = replace(getattr(base, name), **given)
        return WeatherModel(**processes, **data)


class PowerCurveSerializer(StrictSerializer):
    cut_in = serializers.FloatField(source="curve.cut_in", min_value=0, required=False)
    rated_speed = serializers.FloatField(source="curve.rated_speed", min_value=0, required=False)
    cut_out = serializers.FloatField(source="curve.cut_out", min_value=0, required=False)
    R = serializers.FloatField(source="curve.rated_capacity", min_value=0, required=False)
    yaw_exponent = serializers.FloatField(source="curve.yaw_exponent", min_value=0, required=False)
    csv = serializers.CharField(allow_null=True, required=False)

    def build(self, data):
        return PowerCurveSettings(curve=PowerCurve(**data.get("curve", {})), csv=data.get("csv"))


class YawGridSerializer(StrictSerializer):
    levels = serializers.ListField(child=serializers.FloatField(), min_length=1, required=False)
    bin_width = serializers.FloatField(min_value=0, required=False)
    n_levels = serializers.IntegerField(min_value=1, write_only=True, required=False)

    def validate(self, attrs):
        if "levels" in attrs and "n_levels" in attrs:
            raise serializers.ValidationError("Give either levels or n_levels, not both.")
        return attrs

    def build(self, data):
        if "n_levels" in data:
            return YawGrid.symmetric(data["n_levels"], data.get("bin_width", 5.0))
        if "levels" in data:
            data = {**data, "levels": tuple(data["levels"])}
        return YawGrid(**data)


class DegradationSerializer(StrictSerializer):
    mean_alpha = serializers.FloatField(source="prior.mean_alpha", required=False)
    var_alpha = serializers.FloatField(source="prior.var_alpha", min_value=0, required=False)
    mean_beta = serializers.FloatField(source="prior.mean_beta", required=False)
    var_beta = serializers.FloatField(source="prior.var_beta", min_value=0, required=False)
    cov_alpha_beta = serializers.FloatField(source="prior.cov_alpha_beta", required=False)
    sigma = serializers.FloatField(source="prior.sigma", min_value=0, required=False)
    load_table_csv = serializers.CharField(allow_null=True, required=False)
    fatigue_exponent = serializers.FloatField(min_value=0, required=False)

    def build(self, data):
        prior = BaselinePrior(**data.pop("prior", {}))
        return DegradationSettings(prior=prior, **data)


class CampaignSerializer(StrictSerializer):
    n_turbines = serializers.IntegerField(min_value=1, required=False)
    n_rolls = serializers.IntegerField(min_value=1, required=False)
    truth_seed = serializers.IntegerField(min_value=0, required=False)
    Lambda = serializers.FloatField(source="failure_threshold", required=False)
    initial_age_days = serializers.ListField(
        child=serializers.FloatField(min_value=0), min_length=2, max_length=2, required=False
    )
    failure_injections = serializers.DictField(child=serializers.IntegerField(min_value=0), required=False)
    min_elapsed_days = serializers.FloatField(min_value=0, required=False)

    def validate_failure_injections(self, value):
        try:
            return {int(turbine): day for turbine, day in value.items()}
        except ValueError:
            raise serializers.ValidationError("Turbine keys must be integers.")

    def build(self, data):
        if "initial_age_days" in data:
            data = {**data, "initial_age_days": tuple(data["initial_age_days"])}
        return CampaignConfig(**data)


class PoliciesSerializer(StrictSerializer):
    kinds = serializers.ListField(child=EnumChoiceField(PolicyKind), min_length=1, required=False)
    tbs_interval_days = serializers.FloatField(min_value=0, required=False)
    det_reduction = serializers.ChoiceField(choices=["mean"], required=False)

    def build(self, data):
        if "kinds" in data:
            data = {**data, "kinds": tuple(data["kinds"])}
        return PolicySettings(**data)


class RunConfigSerializer(StrictSerializer):
    milp = MilpSerializer(required=False)
    access = AccessSerializer(required=False)
    weather = WeatherSerializer(required=False)
    power_curve = PowerCurveSerializer(required=False)
    yaw_grid = YawGridSerializer(required=False)
    degradation = DegradationSerializer(required=False)
    campaign = CampaignSerializer(required=False)
    policies = PoliciesSerializer(required=False)

    def create(self, validated_data):
        sections = {
            name: self.fields[name].build(dict(validated_data.get(name, {})))
            for name in self.fields
        }
        return RunConfig(**sections)
