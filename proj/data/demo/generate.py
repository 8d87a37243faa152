"""Regenerates trips.csv and roads.csv. Output is fixed by the seed."""
import csv
import random

rng = random.Random(20180301)

roads = []
road_id = 1
for a in range(1, 13):
    for b in (a % 12 + 1, (a + 4) % 12 + 1):
        length = round(rng.uniform(0.8, 6.5), 2)
        speed = rng.choice([30, 40, 50, 60])
        roads.append((road_id, a, b, length, speed))
        road_id += 1
        roads.append((road_id, b, a, length, speed))
        road_id += 1

with open("roads.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["road_id", "src", "dst", "length_km", "speed_limit"])
    w.writerows(roads)

cities = ["Harbin", "Shenyang", "Dalian"]
with open("trips.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["trip_id", "city", "start_node", "end_node", "hour", "distance_km", "duration_min", "fare", "congested"])
    for trip_id in range(1, 241):
        city = rng.choice(cities)
        start = rng.randint(1, 12)
        end = rng.choice([n for n in range(1, 13) if n != start])
        hour = rng.randint(0, 23)
        rush = hour in (7, 8, 9, 17, 18, 19)
        distance = round(rng.uniform(1.0, 25.0), 2)
        speed = rng.uniform(12, 28) if rush else rng.uniform(25, 55)
        duration = round(distance / speed * 60, 1)
        fare = round(8 + 2.1 * distance + 0.35 * duration, 2)
        congested = 1 if speed < 22 else 0
        w.writerow([trip_id, city, start, end, hour, distance, duration, fare, congested])
